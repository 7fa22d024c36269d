#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ctqw/spec_io.hpp"
#include "ctqw/transfer.hpp"

// Report serialization.  Field order is fixed and floats are always written
// with 17 significant digits through one code path, so identical runs produce
// byte-identical artifacts.

namespace ctqw {

inline json vertex_json(const Vertex& v) {
  json a = json::array();
  for (int c : v) a.push_back(c);
  return a;
}

inline json bits_json(std::uint32_t bits, int width) {
  return vertex_json(BasisVector{bits, width}.to_digits());
}

inline json quad_json(const Quad& q) {
  json j;
  j["value"] = to_string(q);
  j["ascii"] = to_string(q, true);
  j["float"] = q.to_double();
  return j;
}

inline json time_json(const TimePoint& t) {
  json j;
  j["value"] = t.value;
  if (t.symbolic) {
    j["closed_form"] = t.describe();
    j["coefficient"] = json::array({t.num, t.den});
    j["radical_power"] = t.radical;
  } else {
    j["closed_form"] = nullptr;
    j["coefficient"] = nullptr;
    j["radical_power"] = nullptr;
  }
  return j;
}

inline json witness_json(const TransferWitness& w) {
  json j;
  j["kind"] = to_string(w.kind);
  j["source"] = vertex_json(w.source);
  j["target"] = vertex_json(w.target);
  j["time"] = time_json(w.time);
  j["fidelity"] = w.fidelity;
  j["phase"] = json::object({{"re", w.phase.real()}, {"im", w.phase.imag()}});
  j["epsilon"] = w.epsilon ? json(*w.epsilon) : json(nullptr);
  return j;
}

inline json certificate_json(const Certificate& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["time"] = c.time ? time_json(*c.time) : json(nullptr);
  if (c.ratio) {
    json r;
    r["lambda_k"] = quad_json(c.ratio->lk);
    r["lambda_l"] = quad_json(c.ratio->ll);
    r["lambda_r"] = quad_json(c.ratio->lr);
    r["lambda_s"] = quad_json(c.ratio->ls);
    j["ratio"] = r;
  } else {
    j["ratio"] = nullptr;
  }
  j["vertex"] = c.vertex ? vertex_json(*c.vertex) : json(nullptr);
  j["holds_all_vertices"] = c.holds_all_vertices;
  json facts = json::object();
  for (const auto& [key, value] : c.facts) facts[key] = value;
  j["facts"] = facts;
  j["notes"] = c.notes;
  return j;
}

inline json parity_class_json(const ParityClass& cls, int width) {
  if (cls.empty()) return nullptr;
  json j;
  json members = json::array();
  for (const BasisVector& b : cls.members) members.push_back(vertex_json(b.to_digits()));
  j["members"] = members;
  j["min_weight"] = cls.min_weight;
  json star = json::array();
  for (const BasisVector& b : cls.star) star.push_back(vertex_json(b.to_digits()));
  j["star"] = star;
  j["star_sum"] = bits_json(cls.star_sum_bits, width);
  return j;
}

inline json parity_json(const ParityProfile& p, int width) {
  json j;
  j["even"] = parity_class_json(p.even, width);
  j["odd"] = parity_class_json(p.odd, width);
  j["full_sum"] = bits_json(p.full_sum_bits, width);
  return j;
}

inline json report_json(const TransferReport& r) {
  json j;
  j["spec"] = spec_to_json(r.spec);
  j["connected"] = r.connected;
  j["headline"] = r.headline;
  j["parity"] = parity_json(r.parity, r.spec.arity());
  json certs = json::array();
  for (const Certificate& c : r.certificates) certs.push_back(certificate_json(c));
  j["certificates"] = certs;
  json wits = json::array();
  for (const TransferWitness& w : r.witnesses) wits.push_back(witness_json(w));
  j["witnesses"] = wits;
  if (r.fidelity_summary) {
    json s;
    s["t_max"] = r.fidelity_summary->t_max;
    s["samples"] = r.fidelity_summary->samples;
    s["max_fidelity"] = r.fidelity_summary->max_fidelity;
    s["at_time"] = r.fidelity_summary->at_time;
    s["source"] = vertex_json(r.fidelity_summary->source);
    s["target"] = vertex_json(r.fidelity_summary->target);
    j["fidelity_summary"] = s;
  } else {
    j["fidelity_summary"] = nullptr;
  }
  j["notes"] = r.notes;
  return j;
}

inline json product_json(const ProductAnalysis& p) {
  json j;
  json wits = json::array();
  for (const TransferWitness& w : p.witnesses) wits.push_back(witness_json(w));
  j["witnesses"] = wits;
  json certs = json::array();
  for (const Certificate& c : p.certificates) certs.push_back(certificate_json(c));
  j["certificates"] = certs;
  j["notes"] = p.notes;
  return j;
}

inline json spectrum_json(const std::vector<SpectrumEntry>& spectrum) {
  json a = json::array();
  for (const SpectrumEntry& e : spectrum) {
    json j;
    j["value"] = to_string(e.value);
    j["float"] = e.value.to_double();
    j["multiplicity"] = e.multiplicity;
    a.push_back(j);
  }
  return a;
}

namespace detail {

inline void escape_into(const std::string& s, std::string& out) {
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;  // UTF-8 passes through
        }
    }
  }
}

inline void dump_into(const json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
  switch (j.type()) {
    case json::value_t::null: out += "null"; break;
    case json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; break;
    case json::value_t::number_integer: out += std::to_string(j.get<long long>()); break;
    case json::value_t::number_unsigned: out += std::to_string(j.get<unsigned long long>()); break;
    case json::value_t::number_float: out += g17(j.get<double>()); break;
    case json::value_t::string:
      out += '"';
      escape_into(j.get_ref<const std::string&>(), out);
      out += '"';
      break;
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += pad;
        dump_into(j[i], out, indent, depth + 1);
        if (i + 1 < j.size()) out += ',';
        out += '\n';
      }
      out += close_pad + "]";
      break;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      std::size_t i = 0;
      for (const auto& [key, value] : j.items()) {
        out += pad + '"';
        escape_into(key, out);
        out += "\": ";
        dump_into(value, out, indent, depth + 1);
        if (++i < j.size()) out += ',';
        out += '\n';
      }
      out += close_pad + "}";
      break;
    }
    default: out += "null"; break;
  }
}

}  // namespace detail

// Deterministic pretty printer: insertion-ordered keys, floats via g17.
inline std::string dump_deterministic(const json& j, int indent = 2) {
  std::string out;
  detail::dump_into(j, out, indent, 0);
  out += '\n';
  return out;
}

inline std::string sweep_csv(const std::vector<std::pair<double, double>>& series) {
  std::string out = "t,fidelity\n";
  for (const auto& [t, fid] : series) out += g17(t) + "," + g17(fid) + "\n";
  return out;
}

inline json sweep_json(const std::vector<std::pair<double, double>>& series) {
  json a = json::array();
  for (const auto& [t, fid] : series) a.push_back(json::object({{"t", t}, {"fidelity", fid}}));
  return a;
}

}  // namespace ctqw
