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

#include "tiab/xml.hpp"

#include <charconv>

#include "tiab/error.hpp"
#include "tiab/text.hpp"

namespace tiab::xml {

const std::string* Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Node* Node::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c->name == child_name) return c.get();
  }
  return nullptr;
}

std::vector<const Node*> Node::children_named(std::string_view child_name) const {
  std::vector<const Node*> out;
  for (const auto& c : children) {
    if (c->name == child_name) out.push_back(c.get());
  }
  return out;
}

const Node* Node::path(std::initializer_list<std::string_view> names) const {
  const Node* cur = this;
  for (auto n : names) {
    cur = cur->child(n);
    if (!cur) return nullptr;
  }
  return cur;
}

std::string Node::inner_text() const {
  if (is_text()) return text;
  std::string out;
  for (const auto& c : children) out += c->inner_text();
  return out;
}

void Node::collect(std::string_view element_name, std::vector<const Node*>& out) const {
  for (const auto& c : children) {
    if (c->is_text()) continue;
    if (c->name == element_name) {
      out.push_back(c.get());
    } else {
      c->collect(element_name, out);
    }
  }
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view doc) : s_(doc) {}

  std::unique_ptr<Node> document() {
    auto root = std::make_unique<Node>();
    root->name = "#document";
    std::vector<Node*> stack{root.get()};
    while (pos_ < s_.size()) {
      if (s_[pos_] != '<') {
        text(*stack.back());
        continue;
      }
      if (starts("<!--")) {
        skip_past("-->");
      } else if (starts("<![CDATA[")) {
        pos_ += 9;
        const std::size_t end = s_.find("]]>", pos_);
        if (end == std::string_view::npos) fail("unterminated CDATA");
        append_text(*stack.back(), std::string(s_.substr(pos_, end - pos_)));
        pos_ = end + 3;
      } else if (starts("<!")) {
        skip_declaration();
      } else if (starts("<?")) {
        skip_past("?>");
      } else if (starts("</")) {
        pos_ += 2;
        const std::string name = read_name();
        skip_ws();
        expect('>');
        if (stack.size() < 2 || stack.back()->name != name) fail("mismatched closing tag </" + name + ">");
        stack.pop_back();
      } else {
        ++pos_;
        auto node = std::make_unique<Node>();
        node->name = read_name();
        bool self_closing = false;
        for (;;) {
          skip_ws();
          if (pos_ >= s_.size()) fail("unterminated start tag");
          if (s_[pos_] == '/') {
            ++pos_;
            expect('>');
            self_closing = true;
            break;
          }
          if (s_[pos_] == '>') {
            ++pos_;
            break;
          }
          std::string key = read_name();
          skip_ws();
          expect('=');
          skip_ws();
          node->attributes.emplace_back(std::move(key), read_quoted());
        }
        Node* raw = node.get();
        stack.back()->children.push_back(std::move(node));
        if (!self_closing) stack.push_back(raw);
      }
    }
    if (stack.size() != 1) fail("unclosed element <" + stack.back()->name + ">");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::parse, "XML: " + what + " at byte " + std::to_string(pos_));
  }

  bool starts(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  void skip_past(std::string_view terminator) {
    const std::size_t end = s_.find(terminator, pos_);
    if (end == std::string_view::npos) fail("unterminated markup");
    pos_ = end + terminator.size();
  }

  // <!DOCTYPE ...> may carry an internal subset in brackets.
  void skip_declaration() {
    int depth = 0;
    while (pos_ < s_.size()) {
      const char c = s_[pos_++];
      if (c == '[') ++depth;
      if (c == ']') --depth;
      if (c == '>' && depth <= 0) return;
    }
    fail("unterminated declaration");
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
  }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string read_name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '>' || c == '/' || c == '=') break;
      ++pos_;
    }
    if (pos_ == start) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string read_quoted() {
    if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("expected quoted attribute value");
    const char q = s_[pos_++];
    const std::size_t end = s_.find(q, pos_);
    if (end == std::string_view::npos) fail("unterminated attribute value");
    std::string v = decode_entities(s_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return v;
  }

  void text(Node& parent) {
    const std::size_t end = std::min(s_.find('<', pos_), s_.size());
    append_text(parent, decode_entities(s_.substr(pos_, end - pos_)));
    pos_ = end;
  }

  static void append_text(Node& parent, std::string t) {
    if (t.empty()) return;
    if (!parent.children.empty() && parent.children.back()->is_text()) {
      parent.children.back()->text += t;
      return;
    }
    auto n = std::make_unique<Node>();
    n->text = std::move(t);
    parent.children.push_back(std::move(n));
  }

  std::string decode_entities(std::string_view raw) const {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      const std::size_t semi = raw.find(';', i);
      if (semi == std::string_view::npos || semi - i > 12) {
        out.push_back('&');
        continue;
      }
      const std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "lt") out.push_back('<');
      else if (ent == "gt") out.push_back('>');
      else if (ent == "amp") out.push_back('&');
      else if (ent == "quot") out.push_back('"');
      else if (ent == "apos") out.push_back('\'');
      else if (!ent.empty() && ent[0] == '#') {
        unsigned long cp = 0;
        const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
        const auto digits = ent.substr(hex ? 2 : 1);
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
        if (ec != std::errc() || p != digits.data() + digits.size() || cp > 0x10FFFF) {
          out.append(raw.substr(i, semi - i + 1));
        } else {
          text::append_utf8(out, static_cast<char32_t>(cp));
        }
      } else {
        // Unknown named entity: keep verbatim.
        out.append(raw.substr(i, semi - i + 1));
      }
      i = semi;
    }
    return out;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::unique_ptr<Node> parse(std::string_view document) { return Parser(document).document(); }

}  // namespace tiab::xml
