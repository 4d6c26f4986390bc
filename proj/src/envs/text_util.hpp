// Copyright 2026 The silg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <string>
#include <vector>

namespace silg::text {

// Substitutes {name} placeholders. Placeholders missing from `values` become
// empty, which is how template lexicons are stripped for vocabularies.
std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& values);

// "a", "a and b", "a, b, and c".
std::string join_list(const std::vector<std::string>& items);

std::string join(const std::vector<std::string>& items, const std::string& sep);

}  // namespace silg::text
