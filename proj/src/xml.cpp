#include "refweave/xml.hpp"

#include <boost/property_tree/detail/rapidxml.hpp>

namespace refweave::xml {

namespace rx = boost::property_tree::detail::rapidxml;

namespace {

void convert(const rx::xml_node<char>* node, Element& out) {
  out.name = std::string(local_name(std::string_view(node->name(), node->name_size())));
  for (auto* a = node->first_attribute(); a; a = a->next_attribute()) {
    out.attributes.emplace_back(std::string(local_name(std::string_view(a->name(), a->name_size()))),
                                std::string(a->value(), a->value_size()));
  }
  for (auto* n = node->first_node(); n; n = n->next_sibling()) {
    switch (n->type()) {
      case rx::node_element: {
        out.children.emplace_back();
        convert(n, out.children.back());
        out.content.push_back({{}, static_cast<int>(out.children.size() - 1)});
        break;
      }
      case rx::node_data:
      case rx::node_cdata:
        out.content.push_back({std::string(n->value(), n->value_size()), -1});
        break;
      default:
        break;
    }
  }
}

void collect_text(const Element& e, std::string& out) {
  for (const auto& piece : e.content) {
    if (piece.child < 0) {
      out += piece.text;
    } else {
      collect_text(e.children[static_cast<std::size_t>(piece.child)], out);
    }
  }
}

}  // namespace

std::string_view local_name(std::string_view qualified) {
  const auto colon = qualified.find(':');
  return colon == std::string_view::npos ? qualified : qualified.substr(colon + 1);
}

const Element* Element::child(std::string_view local) const {
  for (const auto& c : children) {
    if (c.name == local) return &c;
  }
  return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view local) const {
  std::vector<const Element*> out;
  for (const auto& c : children) {
    if (c.name == local) out.push_back(&c);
  }
  return out;
}

std::optional<std::string> Element::attr(std::string_view local) const {
  for (const auto& [k, v] : attributes) {
    if (k == local) return v;
  }
  return std::nullopt;
}

std::string Element::text() const {
  std::string out;
  collect_text(*this, out);
  return out;
}

Element parse(std::string_view document) {
  std::vector<char> buffer(document.begin(), document.end());
  buffer.push_back('\0');
  rx::xml_document<char> doc;
  try {
    doc.parse<rx::parse_validate_closing_tags>(buffer.data());
  } catch (const rx::parse_error& e) {
    throw ParseError(std::string("xml: ") + e.what());
  }
  const rx::xml_node<char>* root = nullptr;
  for (auto* n = doc.first_node(); n; n = n->next_sibling()) {
    if (n->type() == rx::node_element) {
      root = n;
      break;
    }
  }
  if (!root) throw ParseError("xml: no root element");
  Element out;
  convert(root, out);
  return out;
}

}  // namespace refweave::xml
