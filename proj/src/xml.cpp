#include "scex/xml.hpp"

#include <charconv>
#include <cstdint>

#include "scex/error.hpp"
#include "scex/io.hpp"

namespace scex::xml {

Element& Element::set(std::string key, std::string value) {
  attributes.emplace_back(std::move(key), std::move(value));
  return *this;
}

Element& Element::set(std::string key, double value) { return set(std::move(key), format_double(value)); }

Element& Element::set(std::string key, int value) { return set(std::move(key), std::to_string(value)); }

Element& Element::add(Element child) {
  children.push_back(std::move(child));
  return children.back();
}

Element& Element::add_child(std::string child_name) { return add(Element(std::move(child_name))); }

const std::string* Element::attr(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

const std::string& Element::required_attr(std::string_view key) const {
  const std::string* v = attr(key);
  if (!v) throw InputError("<" + name + "> is missing attribute '" + std::string(key) + "'");
  return *v;
}

double parse_number(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) throw InputError("not a number: '" + std::string(s) + "'");
  return v;
}

double Element::number_attr(std::string_view key) const {
  try {
    return parse_number(required_attr(key));
  } catch (const InputError& e) {
    throw InputError("<" + name + " " + std::string(key) + ">: " + e.what());
  }
}

int Element::int_attr(std::string_view key) const {
  const std::string& s = required_attr(key);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InputError("<" + name + " " + std::string(key) + ">: not an integer: '" + s + "'");
  }
  return v;
}

const Element* Element::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

const Element& Element::required_child(std::string_view child_name) const {
  const Element* c = child(child_name);
  if (!c) throw InputError("<" + name + "> is missing child <" + std::string(child_name) + ">");
  return *c;
}

std::vector<const Element*> Element::children_named(std::string_view child_name) const {
  std::vector<const Element*> out;
  for (const auto& c : children) {
    if (c.name == child_name) out.push_back(&c);
  }
  return out;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Element document() {
    skip_misc();
    if (!starts("<")) fail("expected root element");
    Element root = element();
    skip_misc();
    if (pos_ != s_.size()) fail("content after the root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("XML error at byte " + std::to_string(pos_) + ": " + msg, pos_);
  }

  bool starts(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  void expect(std::string_view p) {
    if (!starts(p)) fail("expected '" + std::string(p) + "'");
    pos_ += p.size();
  }

  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

  void skip_space() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  void skip_until(std::string_view end) {
    const auto at = s_.find(end, pos_);
    if (at == std::string_view::npos) {
      pos_ = s_.size();
      fail("unterminated construct, expected '" + std::string(end) + "'");
    }
    pos_ = at + end.size();
  }

  // Whitespace, comments, processing instructions and a doctype.
  void skip_misc() {
    while (true) {
      skip_space();
      if (starts("<?")) {
        skip_until("?>");
      } else if (starts("<!--")) {
        skip_until("-->");
      } else if (starts("<!DOCTYPE")) {
        skip_until(">");
      } else {
        return;
      }
    }
  }

  static bool name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.' || c == ':';
  }

  std::string name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && name_char(s_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }

  void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x110000) {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      fail("character reference out of range");
    }
  }

  void entity(std::string& out) {
    expect("&");
    const auto semi = s_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 10) fail("unterminated entity reference");
    const std::string_view ent = s_.substr(pos_, semi - pos_);
    if (ent == "amp") {
      out += '&';
    } else if (ent == "lt") {
      out += '<';
    } else if (ent == "gt") {
      out += '>';
    } else if (ent == "quot") {
      out += '"';
    } else if (ent == "apos") {
      out += '\'';
    } else if (!ent.empty() && ent[0] == '#') {
      const bool hex = ent.size() > 1 && ent[1] == 'x';
      const std::string_view digits = ent.substr(hex ? 2 : 1);
      std::uint32_t cp = 0;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
      if (ec != std::errc{} || p != digits.data() + digits.size() || digits.empty()) fail("bad character reference");
      append_utf8(out, cp);
    } else {
      fail("unknown entity '&" + std::string(ent) + ";'");
    }
    pos_ = semi + 1;
  }

  std::string attribute_value() {
    if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("expected a quoted attribute value");
    const char q = s_[pos_++];
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated attribute value");
      const char c = s_[pos_];
      if (c == q) {
        ++pos_;
        return out;
      }
      if (c == '<') fail("'<' in attribute value");
      if (c == '&') {
        entity(out);
      } else {
        out += c;
        ++pos_;
      }
    }
  }

  Element element() {
    expect("<");
    Element e(name());
    while (true) {
      const std::size_t before = pos_;
      skip_space();
      if (pos_ >= s_.size()) fail("unexpected end of input in start tag");
      if (starts("/>")) {
        pos_ += 2;
        return e;
      }
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (pos_ == before) fail("expected whitespace before attribute");
      std::string key = name();
      skip_space();
      expect("=");
      skip_space();
      if (e.attr(key)) fail("duplicate attribute '" + key + "'");
      e.attributes.emplace_back(std::move(key), attribute_value());
    }

    std::string text;
    while (true) {
      if (pos_ >= s_.size()) fail("unexpected end of input inside <" + e.name + ">");
      if (starts("</")) {
        pos_ += 2;
        const std::string close = name();
        if (close != e.name) fail("mismatched closing tag </" + close + "> for <" + e.name + ">");
        skip_space();
        expect(">");
        break;
      }
      if (starts("<!--")) {
        skip_until("-->");
      } else if (starts("<![CDATA[")) {
        pos_ += 9;
        const auto end = s_.find("]]>", pos_);
        if (end == std::string_view::npos) fail("unterminated CDATA section");
        text.append(s_.substr(pos_, end - pos_));
        pos_ = end + 3;
      } else if (starts("<?")) {
        skip_until("?>");
      } else if (s_[pos_] == '<') {
        e.children.push_back(element());
      } else if (s_[pos_] == '&') {
        entity(text);
      } else {
        text += s_[pos_++];
      }
    }
    // Whitespace between child elements is formatting, not content.
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
      text.clear();
    } else if (!e.children.empty()) {
      text = text.substr(first, text.find_last_not_of(" \t\r\n") - first + 1);
    }
    e.text = std::move(text);
    return e;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

void escape(std::string& out, std::string_view s, bool in_attribute) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (in_attribute) {
          out += "&quot;";
        } else {
          out += c;
        }
        break;
      default: out += c;
    }
  }
}

void write(const Element& e, std::string& out, int depth) {
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  out += '<';
  out += e.name;
  for (const auto& [k, v] : e.attributes) {
    out += ' ';
    out += k;
    out += "=\"";
    escape(out, v, true);
    out += '"';
  }
  if (e.children.empty() && e.text.empty()) {
    out += "/>\n";
    return;
  }
  out += '>';
  if (e.children.empty()) {
    escape(out, e.text, false);
  } else {
    out += '\n';
    if (!e.text.empty()) {
      out.append(static_cast<std::size_t>(depth + 1) * 2, ' ');
      escape(out, e.text, false);
      out += '\n';
    }
    for (const auto& c : e.children) write(c, out, depth + 1);
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
  }
  out += "</";
  out += e.name;
  out += ">\n";
}

}  // namespace

Element parse(std::string_view text) { return Parser(text).document(); }

std::string serialize(const Element& root) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  write(root, out, 0);
  return out;
}

}  // namespace scex::xml
