#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "palms/floorplan.hpp"
#include "palms/geometry.hpp"

namespace palms::detail {

using Json = nlohmann::ordered_json;

inline Json parse_document(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
  }
}

inline void expect_format(const Json& doc, std::string_view format) {
  if (!doc.is_object()) throw ParseError("document root must be an object");
  auto it = doc.find("format");
  if (it == doc.end() || !it->is_string()) throw ParseError("missing \"format\" field");
  if (it->get<std::string>() != format) {
    throw ParseError("unsupported format \"" + it->get<std::string>() + "\", expected \"" +
                     std::string(format) + "\"");
  }
  auto units = doc.find("units");
  if (units != doc.end() && (!units->is_string() || units->get<std::string>() != "meters")) {
    throw ParseError("units must be \"meters\"");
  }
}

inline const Json& require(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing \"") + key + "\" field");
  return *it;
}

inline double number(const Json& v, const char* what) {
  if (!v.is_number()) throw ParseError(std::string(what) + " must be a number");
  return v.get<double>();
}

inline std::vector<double> numbers(const Json& v, std::size_t n, const char* what) {
  if (!v.is_array() || v.size() != n) {
    throw ParseError(std::string(what) + " must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, what));
  return out;
}

inline Vec2 point(const Json& v, const char* what) {
  const auto xs = numbers(v, 2, what);
  return {xs[0], xs[1]};
}

inline Json to_json(Vec2 p) { return Json::array({p.x, p.y}); }

/// Parses `[{a:[x,y], b:[x,y]}...]`; invalid segments are reported by index.
inline std::vector<Segment2D> segment_list(const Json& arr, const char* what) {
  if (!arr.is_array()) throw ParseError(std::string(what) + " must be an array");
  std::vector<Segment2D> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const Json& w = arr[i];
    if (!w.is_object()) throw ParseError(std::string(what) + " entries must be objects");
    const Vec2 a = point(require(w, "a"), "a");
    const Vec2 b = point(require(w, "b"), "b");
    try {
      out.emplace_back(a, b);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string(what) + "[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return out;
}

inline Json segment_list_json(std::span<const Segment2D> segs) {
  Json arr = Json::array();
  for (const auto& s : segs) {
    Json w = Json::object();
    w["a"] = to_json(s.a());
    w["b"] = to_json(s.b());
    arr.push_back(std::move(w));
  }
  return arr;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace palms::detail
