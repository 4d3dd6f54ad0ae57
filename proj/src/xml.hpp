#pragma once

// Minimal DOM over expat. Keeps attribute order and source positions so
// uninterpreted elements can be re-emitted verbatim and errors can point
// at the offending element.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace artready::xml {

struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Node> children;
  std::string text;
  long line = 0;
  long column = 0;

  const std::string* attribute(std::string_view key) const;
  const Node* child(std::string_view child_name) const;
  std::vector<const Node*> children_named(std::string_view child_name) const;
  std::string location() const;
};

struct Document {
  Node root;
  /// Comments that appear directly inside the root element, in order.
  std::vector<std::string> root_comments;
};

/// Throws Error(MalformedXml) with line/column on failure.
Document parse(std::string_view text);

std::string escape(std::string_view text);

/// Serializes `node` with the given indentation depth (two spaces per level).
void write(const Node& node, std::string& out, int depth);
std::string to_string(const Node& node);

}  // namespace artready::xml
