#pragma once

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctqw/oracle.hpp"
#include "ctqw/report_io.hpp"
#include "ctqw/spec_io.hpp"
#include "ctqw/transfer.hpp"

// Command-line front end.  run() is the whole program minus main(): it takes
// argv-style arguments plus output/diagnostic streams and returns the exit
// code (0 success, 1 invalid input, 2 search bounds exhausted), which keeps
// every code path testable in-process.

namespace ctqw::cli {

inline constexpr const char* kVersion = "ctqw 1.0.0";

struct RunConfig {
  std::string input, input_b, output;
  std::string from_str, to_str, format = "csv";
  double epsilon = 1e-3;
  long long max_q = 1'000'000;
  long long dense_limit = 4096;
  double t_max = 50.0;
  int samples = 5000;
  int times = 10;
  unsigned long long seed = 12345;
};

namespace detail {

inline Vertex parse_vertex_arg(const std::string& text, const NepsSpec& spec,
                               const std::string& flag) {
  Vertex v;
  std::string acc;
  auto flush = [&] {
    if (acc.empty()) throw SpecError(flag + ": empty coordinate in \"" + text + "\"");
    try {
      v.push_back(std::stoi(acc));
    } catch (const std::exception&) {
      throw SpecError(flag + ": \"" + acc + "\" is not an integer coordinate");
    }
    acc.clear();
  };
  for (char ch : text) {
    if (ch == ',')
      flush();
    else if (ch != ' ')
      acc += ch;
  }
  flush();
  vertex_index(spec, v);  // range/arity check with its own message
  return v;
}

inline void emit(const std::string& text, const RunConfig& cfg, std::ostream& out) {
  if (cfg.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.output, std::ios::binary);
  if (!f) throw SpecError("cannot write output file \"" + cfg.output + "\"");
  f << text;
}

inline SearchOptions search_options(const RunConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
    throw SpecError("--epsilon must lie strictly between 0 and 1");
  if (cfg.max_q < 1) throw SpecError("--max-q must be positive");
  if (cfg.dense_limit < 1) throw SpecError("--dense-limit must be positive");
  SearchOptions opts;
  opts.epsilon = cfg.epsilon;
  opts.max_q = cfg.max_q;
  opts.dense_limit = cfg.dense_limit;
  return opts;
}

inline int cmd_spectrum(const RunConfig& cfg, std::ostream& out) {
  NepsSpec spec = spec_from_file(cfg.input);
  emit(dump_deterministic(spectrum_json(distinct_spectrum(spec))), cfg, out);
  return 0;
}

inline int cmd_classify(const RunConfig& cfg, std::ostream& out) {
  NepsSpec spec = spec_from_file(cfg.input);
  TransferReport report = classify(spec, cfg.epsilon, search_options(cfg));
  emit(dump_deterministic(report_json(report)), cfg, out);
  return 0;
}

inline int cmd_search(const RunConfig& cfg, std::ostream& out) {
  NepsSpec spec = spec_from_file(cfg.input);
  TransferReport report = classify(spec, cfg.epsilon, search_options(cfg));
  json j;
  j["headline"] = report.headline;
  json certs = json::array();
  for (const Certificate& c : report.certificates) certs.push_back(certificate_json(c));
  j["certificates"] = certs;
  json wits = json::array();
  for (const TransferWitness& w : report.witnesses) wits.push_back(witness_json(w));
  j["witnesses"] = wits;
  j["notes"] = report.notes;
  emit(dump_deterministic(j), cfg, out);
  return 0;
}

inline int cmd_fidelity(const RunConfig& cfg, std::ostream& out) {
  NepsSpec spec = spec_from_file(cfg.input);
  if (cfg.samples < 2) throw SpecError("--samples must be at least 2");
  if (!(cfg.t_max > 0)) throw SpecError("--t-max must be positive");
  Vertex u = parse_vertex_arg(cfg.from_str, spec, "--from");
  Vertex v = parse_vertex_arg(cfg.to_str, spec, "--to");
  auto series = fidelity_sweep(spec, u, v, cfg.t_max, cfg.samples);
  if (cfg.format == "csv")
    emit(sweep_csv(series), cfg, out);
  else if (cfg.format == "json")
    emit(dump_deterministic(sweep_json(series)), cfg, out);
  else
    throw SpecError("--format must be csv or json");
  return 0;
}

inline int cmd_product(const RunConfig& cfg, std::ostream& out) {
  NepsSpec a = spec_from_file(cfg.input);
  NepsSpec b = spec_from_file(cfg.input_b);
  ProductAnalysis analysis = analyze_product(a, b, cfg.epsilon, search_options(cfg));
  emit(dump_deterministic(product_json(analysis)), cfg, out);
  return 0;
}

// Hidden cross-validation command: tensor-structured evolution against the
// dense Jacobi/expm oracle, and the exact spectrum against Jacobi
// eigenvalues.
inline int cmd_oracle_check(const RunConfig& cfg, std::ostream& out) {
  NepsSpec spec = spec_from_file(cfg.input);
  long long n = spec.vertex_count();
  auto adj = adjacency_matrix(spec, cfg.dense_limit);
  oracle::DenseMatrix m(static_cast<int>(n));
  for (long long i = 0; i < n; ++i)
    for (long long j = 0; j < n; ++j) m.at(static_cast<int>(i), static_cast<int>(j)) = adj[i][j];

  std::vector<double> exact;
  for (const SpectrumEntry& e : distinct_spectrum(spec))
    for (long long i = 0; i < e.multiplicity; ++i) exact.push_back(e.value.to_double());
  oracle::EigenResult eig = oracle::jacobi_eigen(m);
  double eig_dev = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i)
    eig_dev = std::max(eig_dev, std::abs(exact[i] - eig.values[i]));

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  double h_dev = 0.0;
  for (int trial = 0; trial < cfg.times; ++trial) {
    double t = dist(rng);
    auto dense = oracle::expm_unitary(m, t);
    auto fast = transition_matrix(spec, t, cfg.dense_limit);
    for (long long i = 0; i < n; ++i)
      for (long long j = 0; j < n; ++j)
        h_dev = std::max(h_dev, std::abs(fast[i][j] - dense[static_cast<std::size_t>(i) * n + j]));
  }

  bool pass = eig_dev <= 1e-9 && h_dev <= 1e-8;
  json j;
  j["vertices"] = n;
  j["times"] = cfg.times;
  j["seed"] = cfg.seed;
  j["max_eigenvalue_deviation"] = eig_dev;
  j["max_h_deviation"] = h_dev;
  j["pass"] = pass;
  emit(dump_deterministic(j), cfg, out);
  return pass ? 0 : 1;
}

}  // namespace detail

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"classification of state transfer in quantum walks on NEPS of paths", "ctqw"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_input = [&](CLI::App* sub) {
    sub->add_option("-i,--input", cfg.input, "walk spec JSON file")->required();
  };
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--epsilon", cfg.epsilon, "PGST fidelity bound (1 - epsilon)");
    sub->add_option("--max-q", cfg.max_q, "witness-time scan bound");
    sub->add_option("--out", cfg.output, "output path (default: standard output)");
  };

  CLI::App* spectrum = app.add_subcommand("spectrum", "distinct eigenvalues with multiplicities");
  add_input(spectrum);
  spectrum->add_option("--out", cfg.output, "output path (default: standard output)");

  CLI::App* classify_cmd = app.add_subcommand("classify", "full transfer classification report");
  add_input(classify_cmd);
  add_common(classify_cmd);
  classify_cmd->add_option("--dense-limit", cfg.dense_limit, "dense verification size cutoff");

  CLI::App* fidelity = app.add_subcommand("fidelity", "fidelity time series between two vertices");
  add_input(fidelity);
  fidelity->add_option("--from", cfg.from_str, "source vertex, comma-separated 0-based coordinates")
      ->required();
  fidelity->add_option("--to", cfg.to_str, "target vertex, comma-separated 0-based coordinates")
      ->required();
  fidelity->add_option("--t-max", cfg.t_max, "end of the time grid");
  fidelity->add_option("--samples", cfg.samples, "number of grid samples");
  fidelity->add_option("--format", cfg.format, "csv or json");
  fidelity->add_option("--out", cfg.output, "output path (default: standard output)");

  CLI::App* search = app.add_subcommand("search", "transfer witnesses and certificates only");
  add_input(search);
  add_common(search);

  CLI::App* product = app.add_subcommand("product", "Cartesian-product transfer analysis");
  product->add_option("-a,--first", cfg.input, "first factor spec JSON file")->required();
  product->add_option("-b,--second", cfg.input_b, "second factor spec JSON file")->required();
  add_common(product);

  CLI::App* oracle_check = app.add_subcommand("oracle-check", "");
  oracle_check->group("");  // hidden: CI cross-validation
  add_input(oracle_check);
  oracle_check->add_option("--times", cfg.times, "random times to compare");
  oracle_check->add_option("--seed", cfg.seed, "RNG seed");
  oracle_check->add_option("--dense-limit", cfg.dense_limit, "dense size cutoff");
  oracle_check->add_option("--out", cfg.output, "output path");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (app.got_subcommand(spectrum)) return detail::cmd_spectrum(cfg, out);
    if (app.got_subcommand(classify_cmd)) return detail::cmd_classify(cfg, out);
    if (app.got_subcommand(fidelity)) return detail::cmd_fidelity(cfg, out);
    if (app.got_subcommand(search)) return detail::cmd_search(cfg, out);
    if (app.got_subcommand(product)) return detail::cmd_product(cfg, out);
    if (app.got_subcommand(oracle_check)) return detail::cmd_oracle_check(cfg, out);
    err << "error: no subcommand selected\n";
    return 1;
  } catch (const CLI::CallForHelp&) {
    auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const SearchBoundError& e) {
    err << "UNKNOWN: " << e.what() << "\n";
    return 2;
  } catch (const KroneckerBoundError& e) {
    err << "UNKNOWN: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ctqw::cli
