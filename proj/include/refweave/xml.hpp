#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Small owned DOM for the two XML dialects the engine reads (Atom feeds and
// GROBID TEI). Names are stored without their namespace prefix.
namespace refweave::xml {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Element {
  /// Mixed content in document order: text, or an index into `children`.
  struct Piece {
    std::string text;
    int child = -1;
  };

  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::vector<Piece> content;

  const Element* child(std::string_view local_name) const;
  std::vector<const Element*> children_named(std::string_view local_name) const;
  std::optional<std::string> attr(std::string_view local_name) const;

  /// Concatenated descendant character data (entities already decoded).
  std::string text() const;
};

/// Parses a complete document and returns its root element.
Element parse(std::string_view document);

/// Local part of a possibly prefixed name ("arxiv:comment" -> "comment").
std::string_view local_name(std::string_view qualified);

}  // namespace refweave::xml
