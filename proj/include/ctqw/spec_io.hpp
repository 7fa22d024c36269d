#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctqw/neps.hpp"

// JSON walk description:
//   {"factors": ["P3","P3"], "omega": [[1,0],[1,1]]}
// factors are P2/P3 names, omega rows are 0/1 coordinate tuples (coordinate i
// of a row pairs with factor i).  Errors name the offending field.

namespace ctqw {

using json = nlohmann::ordered_json;

inline NepsSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw SpecError("spec must be a JSON object");
  if (!j.contains("factors") || !j["factors"].is_array() || j["factors"].empty())
    throw SpecError("spec needs a nonempty \"factors\" array");
  if (!j.contains("omega") || !j["omega"].is_array() || j["omega"].empty())
    throw SpecError("spec needs a nonempty \"omega\" array");

  std::vector<Factor> factors;
  for (const json& f : j["factors"]) {
    if (!f.is_string()) throw SpecError("\"factors\" entries must be strings (\"P2\" or \"P3\")");
    std::string name = f.get<std::string>();
    if (name == "P2")
      factors.push_back(Factor::P2);
    else if (name == "P3")
      factors.push_back(Factor::P3);
    else
      throw SpecError("unknown factor \"" + name + "\"; expected \"P2\" or \"P3\"");
  }

  std::vector<std::uint32_t> omega;
  std::size_t row = 0;
  for (const json& b : j["omega"]) {
    ++row;
    if (!b.is_array())
      throw SpecError("omega row " + std::to_string(row) + " must be an array of 0/1 entries");
    std::vector<int> digits;
    for (const json& e : b) {
      if (!e.is_number_integer() || (e.get<int>() != 0 && e.get<int>() != 1))
        throw SpecError("omega row " + std::to_string(row) + " must contain only 0 or 1");
      digits.push_back(e.get<int>());
    }
    if (digits.size() != factors.size())
      throw SpecError("omega row " + std::to_string(row) + " has " +
                      std::to_string(digits.size()) + " entries but there are " +
                      std::to_string(factors.size()) + " factors");
    std::uint32_t bits = pack_bits(digits);
    if (bits == 0)
      throw SpecError("omega row " + std::to_string(row) +
                      " is the all-zero tuple, which the basis set excludes");
    omega.push_back(bits);
  }
  return make_neps(std::move(factors), std::move(omega));
}

inline NepsSpec spec_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file \"" + path + "\"");
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError("spec file \"" + path + "\" is not valid JSON: " + e.what());
  }
  return spec_from_json(j);
}

inline json spec_to_json(const NepsSpec& spec) {
  json j;
  j["factors"] = json::array();
  for (Factor f : spec.factors) j["factors"].push_back(factor_name(f));
  j["omega"] = json::array();
  for (const BasisVector& b : spec.omega) j["omega"].push_back(b.to_digits());
  return j;
}

}  // namespace ctqw
