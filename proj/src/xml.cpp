#include "xml.hpp"

#include <expat.h>

#include <memory>

#include "artready/error.hpp"

namespace artready::xml {

const std::string* Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Node* Node::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

std::vector<const Node*> Node::children_named(std::string_view child_name) const {
  std::vector<const Node*> out;
  for (const auto& c : children) {
    if (c.name == child_name) out.push_back(&c);
  }
  return out;
}

std::string Node::location() const {
  return "<" + name + "> at line " + std::to_string(line) + ", column " + std::to_string(column);
}

namespace {

struct ParseState {
  XML_Parser parser = nullptr;
  std::vector<Node*> stack;
  Node root;
  bool have_root = false;
  std::vector<std::string> root_comments;
};

void on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
  auto* st = static_cast<ParseState*>(user);
  Node node;
  node.name = name;
  node.line = static_cast<long>(XML_GetCurrentLineNumber(st->parser));
  node.column = static_cast<long>(XML_GetCurrentColumnNumber(st->parser)) + 1;
  for (int i = 0; attrs[i] != nullptr; i += 2) {
    node.attributes.emplace_back(attrs[i], attrs[i + 1]);
  }
  if (st->stack.empty()) {
    st->root = std::move(node);
    st->have_root = true;
    st->stack.push_back(&st->root);
  } else {
    Node* parent = st->stack.back();
    parent->children.push_back(std::move(node));
    st->stack.push_back(&parent->children.back());
  }
}

void on_end(void* user, const XML_Char*) {
  auto* st = static_cast<ParseState*>(user);
  st->stack.pop_back();
}

void on_text(void* user, const XML_Char* s, int len) {
  auto* st = static_cast<ParseState*>(user);
  if (!st->stack.empty()) st->stack.back()->text.append(s, static_cast<size_t>(len));
}

void on_comment(void* user, const XML_Char* data) {
  auto* st = static_cast<ParseState*>(user);
  if (st->stack.size() == 1) st->root_comments.emplace_back(data);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void trim_text(Node& node) {
  node.text = trim(node.text);
  for (auto& c : node.children) trim_text(c);
}

}  // namespace

Document parse(std::string_view text) {
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
      XML_ParserCreate("UTF-8"), &XML_ParserFree);
  ParseState st;
  st.parser = parser.get();
  XML_SetUserData(parser.get(), &st);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);
  XML_SetCommentHandler(parser.get(), on_comment);
  if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE) == XML_STATUS_ERROR) {
    const auto line = XML_GetCurrentLineNumber(parser.get());
    const auto col = XML_GetCurrentColumnNumber(parser.get()) + 1;
    throw Error(ErrorKind::MalformedXml, XML_ErrorString(XML_GetErrorCode(parser.get())),
                "line " + std::to_string(line) + ", column " + std::to_string(col));
  }
  if (!st.have_root) throw Error(ErrorKind::MalformedXml, "document has no root element");
  Document doc;
  doc.root = std::move(st.root);
  trim_text(doc.root);
  doc.root_comments = std::move(st.root_comments);
  return doc;
}

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write(const Node& node, std::string& out, int depth) {
  const std::string indent(static_cast<size_t>(depth) * 2, ' ');
  out += indent + "<" + node.name;
  for (const auto& [k, v] : node.attributes) out += " " + k + "=\"" + escape(v) + "\"";
  if (node.children.empty() && node.text.empty()) {
    out += "/>\n";
    return;
  }
  out += ">";
  if (node.children.empty()) {
    out += escape(node.text) + "</" + node.name + ">\n";
    return;
  }
  out += "\n";
  if (!node.text.empty()) out += indent + "  " + escape(node.text) + "\n";
  for (const auto& c : node.children) write(c, out, depth + 1);
  out += indent + "</" + node.name + ">\n";
}

std::string to_string(const Node& node) {
  std::string out;
  write(node, out, 0);
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

}  // namespace artready::xml
