#pragma once

// Minimal XML element tree for the OpenX subset: elements, attributes in
// insertion order and leaf text. No namespaces, DTDs or mixed content.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scex::xml {

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;

  explicit Element(std::string n = {}) : name(std::move(n)) {}

  Element& set(std::string key, std::string value);
  Element& set(std::string key, double value);
  Element& set(std::string key, int value);
  Element& add(Element child);
  Element& add_child(std::string child_name);

  const std::string* attr(std::string_view key) const;
  /// Throws InputError when missing.
  const std::string& required_attr(std::string_view key) const;
  double number_attr(std::string_view key) const;
  int int_attr(std::string_view key) const;

  const Element* child(std::string_view child_name) const;
  const Element& required_child(std::string_view child_name) const;
  std::vector<const Element*> children_named(std::string_view child_name) const;

  friend bool operator==(const Element&, const Element&) = default;
};

/// Throws ParseError carrying the byte offset of the fault.
Element parse(std::string_view text);

/// Canonical form: XML declaration, 2-space indent, attributes in stored
/// order, self-closing empty elements, LF line endings.
std::string serialize(const Element& root);

double parse_number(std::string_view s);

}  // namespace scex::xml
