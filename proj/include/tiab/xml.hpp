// Copyright 2026 The tiab-screen Authors
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

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Small non-validating XML reader: elements, attributes, character data,
// CDATA and the predefined/numeric entities. DOCTYPE, comments and
// processing instructions are skipped. Namespaces are not interpreted.
namespace tiab::xml {

struct Node {
  std::string name;  // empty for text nodes
  std::string text;  // text nodes only
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<std::unique_ptr<Node>> children;

  bool is_text() const noexcept { return name.empty(); }
  const std::string* attribute(std::string_view key) const;
  const Node* child(std::string_view child_name) const;
  std::vector<const Node*> children_named(std::string_view child_name) const;
  /// First element reached by following child names, e.g. {"Journal", "Title"}.
  const Node* path(std::initializer_list<std::string_view> names) const;
  /// Concatenated character data of this subtree in document order.
  std::string inner_text() const;
  void collect(std::string_view element_name, std::vector<const Node*>& out) const;
};

/// Parses a whole document; throws Error(parse) on malformed markup.
std::unique_ptr<Node> parse(std::string_view document);

}  // namespace tiab::xml
