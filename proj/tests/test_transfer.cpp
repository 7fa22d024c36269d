#include <catch2/catch_amalgamated.hpp>

#include "ctqw/transfer.hpp"
#include "test_support.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

using namespace ctqw;
using test_support::factor_lists;
using test_support::matmul;
using test_support::max_abs_diff;
using test_support::omega_subsets;
using test_support::seeded_times;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

std::optional<std::string> fact_value(const Certificate& c, const std::string& key) {
  for (const auto& [k, v] : c.facts)
    if (k == key) return v;
  return std::nullopt;
}

NepsSpec grid33() { return make_neps({Factor::P3, Factor::P3}, {1, 2}); }
NepsSpec tensor33() { return make_neps({Factor::P3, Factor::P3}, {3}); }
NepsSpec mixed_parity33() { return make_neps({Factor::P3, Factor::P3}, {1, 3}); }
NepsSpec mixed_parity333() {
  return make_neps({Factor::P3, Factor::P3, Factor::P3}, {pack_bits({1, 1, 0}), pack_bits({1, 1, 1})});
}

double dense_distance(const NepsSpec& a, double ta, const NepsSpec& b, double tb) {
  return max_abs_diff(transition_matrix(a, ta, 4096), transition_matrix(b, tb, 4096));
}

}  // namespace

TEST_CASE("time points render their closed forms", "[transfer][time]") {
  CHECK(TimePoint::tau(1).describe() == "pi/sqrt2");
  CHECK(TimePoint::tau(2).describe() == "pi/sqrt2^2");
  CHECK(TimePoint::pi_form(29, 1, 0).describe() == "29*pi");
  CHECK(TimePoint::pi_form(1, 2, 0).describe() == "pi/2");
  CHECK(TimePoint::pi_form(2, 1, 1).describe() == "2*pi/sqrt2");
  CHECK(TimePoint::pi_form(41, 2, 0).describe() == "41*pi/2");
  CHECK(TimePoint::pi_form(2, 4, 0).describe() == "pi/2");  // reduced
  CHECK(TimePoint::tau(1).value == Catch::Approx(kPi / kSqrt2).margin(1e-15));
  CHECK(TimePoint::pi_form(41, 2, 0).value == Catch::Approx(41 * kPi / 2).margin(1e-12));

  TimePoint m = TimePoint::tau(1).times(4);
  CHECK(m.describe() == "4*pi/sqrt2");
  CHECK(m.value == Catch::Approx(4 * kPi / kSqrt2).margin(1e-12));
  TimePoint n = TimePoint::numeric(1.5).times(2);
  CHECK_FALSE(n.symbolic);
  CHECK(n.value == Catch::Approx(3.0));

  CHECK_THROWS_AS(TimePoint::pi_form(1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(TimePoint::pi_form(1, 1, -1), std::invalid_argument);
}

TEST_CASE("g17 renders doubles deterministically", "[transfer]") {
  CHECK(g17(0.5) == "0.5");
  CHECK(g17(-0.0) == "0");
  CHECK(g17(1.0 / 3.0) == "0.33333333333333331");
  CHECK(g17(2.5e-4) == "0.00025000000000000001");  // 17 significant digits, not shortest
}

TEST_CASE("sufficient condition: standard basis on two P3 factors", "[transfer][pst]") {
  auto result = check_pst_sufficient(grid33());
  REQUIRE(result.has_value());
  const auto& [cert, wit] = *result;
  CHECK(cert.kind == CertKind::PST_SUFFICIENT);
  CHECK(cert.time->describe() == "pi/sqrt2");
  CHECK(fact_value(cert, "k") == "1");
  CHECK(fact_value(cert, "star_sum") == "(1,1)");
  CHECK(cert.notes.empty());  // connected, no caveat
  CHECK(wit.kind == WitnessKind::PST);
  CHECK(wit.source == Vertex{0, 0});
  CHECK(wit.target == Vertex{2, 2});
  CHECK(wit.fidelity >= 1.0 - 1e-9);

  // independent dense-oracle confirmation
  auto h = test_support::oracle_h(grid33(), kPi / kSqrt2);
  CHECK(std::abs(h[8][0]) >= 1.0 - 1e-8);
}

TEST_CASE("sufficient condition: all-ones vector, disconnected tensor walk", "[transfer][pst]") {
  auto result = check_pst_sufficient(tensor33());
  REQUIRE(result.has_value());
  const auto& [cert, wit] = *result;
  CHECK(cert.time->value == Catch::Approx(kPi / 2).margin(1e-15));
  CHECK(fact_value(cert, "k") == "2");
  REQUIRE(cert.notes.size() == 1);
  CHECK(cert.notes[0].find("disconnected") != std::string::npos);
  // the end-to-end corner pair does not transfer here; the middle-row pair does
  CHECK(wit.source == Vertex{0, 1});
  CHECK(wit.target == Vertex{2, 1});
  CHECK(wit.fidelity >= 1.0 - 1e-9);
  CHECK(std::abs(wit.phase - Complex{-1.0, 0.0}) < 1e-9);
}

TEST_CASE("sufficient condition: four factors, uniform even parity", "[transfer][pst]") {
  NepsSpec spec = make_neps({Factor::P3, Factor::P3, Factor::P3, Factor::P3},
                            {pack_bits({1, 1, 0, 0}), pack_bits({1, 1, 1, 1})});
  auto result = check_pst_sufficient(spec);
  REQUIRE(result.has_value());
  CHECK(result->first.time->value == Catch::Approx(kPi / 2).margin(1e-15));
  CHECK(fact_value(result->first, "omega_star") == "{(1,1,0,0)}");
  CHECK(result->second.source == Vertex{0, 1, 0, 0});
  CHECK(result->second.target == Vertex{2, 1, 0, 0});
  CHECK(result->second.fidelity >= 1.0 - 1e-9);
}

TEST_CASE("sufficient condition: single path end to end", "[transfer][pst]") {
  auto result = check_pst_sufficient(make_neps({Factor::P3}, {1}));
  REQUIRE(result.has_value());
  CHECK(result->second.source == Vertex{0});
  CHECK(result->second.target == Vertex{2});
  CHECK(std::abs(result->second.phase - Complex{-1.0, 0.0}) < 1e-9);
}

TEST_CASE("sufficient condition: all-P2 transfers at pi/2 when the full sum is nonzero",
          "[transfer][pst]") {
  SECTION("two vectors, nonzero sum") {
    auto result = check_pst_sufficient(make_neps({Factor::P2, Factor::P2}, {1, 3}));
    REQUIRE(result.has_value());
    CHECK(result->first.time->describe() == "pi/2");
    CHECK(fact_value(result->first, "sigma") == "(0,1)");
    CHECK(result->second.source == Vertex{0, 0});
    CHECK(result->second.target == Vertex{0, 1});
    CHECK(result->second.fidelity >= 1.0 - 1e-9);
  }
  SECTION("the 4-cycle transfers antipodally with phase (-i)^2") {
    auto result = check_pst_sufficient(make_neps({Factor::P2, Factor::P2}, {1, 2}));
    REQUIRE(result.has_value());
    CHECK(result->second.source == Vertex{0, 0});
    CHECK(result->second.target == Vertex{1, 1});
    CHECK(std::abs(result->second.phase - Complex{-1.0, 0.0}) < 1e-9);
  }
  SECTION("vanishing sum: absent") {
    CHECK_FALSE(check_pst_sufficient(make_neps({Factor::P2, Factor::P2}, {1, 2, 3})).has_value());
  }
}

TEST_CASE("sufficient condition declines out-of-scope specs", "[transfer][pst]") {
  CHECK_FALSE(check_pst_sufficient(mixed_parity33()).has_value());      // mixed parity
  CHECK_FALSE(check_pst_sufficient(make_neps({Factor::P2, Factor::P3}, {3})).has_value());
  // uniform odd parity whose minimum-weight layer cancels over GF(2)
  NepsSpec open_case =
      make_neps({Factor::P3, Factor::P3, Factor::P3, Factor::P3, Factor::P3},
                {pack_bits({1, 1, 1, 0, 0}), pack_bits({0, 0, 1, 1, 1}), pack_bits({1, 0, 1, 0, 1}),
                 pack_bits({0, 1, 1, 1, 0})});
  ParityProfile p = parity_profile(open_case);
  REQUIRE(p.uniform());
  REQUIRE_FALSE(p.odd.star_sum_nonzero());
  CHECK_FALSE(check_pst_sufficient(open_case).has_value());
}

TEST_CASE("every reported PST pair is periodic at twice the witness time", "[transfer][pst]") {
  std::vector<NepsSpec> specs = {grid33(), tensor33(), make_neps({Factor::P3}, {1}),
                                 make_neps({Factor::P2, Factor::P2}, {1, 2})};
  for (const NepsSpec& spec : specs) {
    auto result = check_pst_sufficient(spec);
    REQUIRE(result.has_value());
    const TransferWitness& w = result->second;
    CHECK(PairKernel(spec, w.source, w.source).fidelity_at(2 * w.time.value) >= 1.0 - 1e-8);
    CHECK(PairKernel(spec, w.target, w.target).fidelity_at(2 * w.time.value) >= 1.0 - 1e-8);
  }
}

TEST_CASE("witness scan hits nothing at a generic time", "[transfer][pst]") {
  CHECK_FALSE(find_pst_witness(grid33(), TimePoint::numeric(kPi / 4)).has_value());
}

TEST_CASE("no-PST certificate from the mixed-parity eigenvalue triple", "[transfer][nopst]") {
  auto cert = check_no_pst_mixed_parity(mixed_parity33());
  REQUIRE(cert.has_value());
  CHECK(cert->kind == CertKind::NO_PST_RATIO);
  CHECK(cert->holds_all_vertices);
  CHECK(fact_value(*cert, "a") == "2");
  CHECK(fact_value(*cert, "b") == "1");
  CHECK(fact_value(*cert, "c") == "-2");
  CHECK(fact_value(*cert, "d") == "-1");
  CHECK(fact_value(*cert, "flipped_coordinate") == "0");
  REQUIRE(cert->ratio.has_value());
  CHECK(cert->ratio->lk == Quad{2, 1});
  CHECK(cert->ratio->ll == Quad{2, -1});
  CHECK(cert->ratio->ls == Quad{-2, -1});
  CHECK_FALSE(ratio_is_rational(cert->ratio->lk - cert->ratio->ll, cert->ratio->lr - cert->ratio->ls));
}

TEST_CASE("no-PST certificate on three factors", "[transfer][nopst]") {
  NepsSpec spec = make_neps({Factor::P3, Factor::P3, Factor::P3},
                            {pack_bits({1, 0, 0}), pack_bits({0, 1, 1})});
  auto cert = check_no_pst_mixed_parity(spec);
  REQUIRE(cert.has_value());
  CHECK(fact_value(*cert, "a") == "2");
  CHECK(fact_value(*cert, "b") == "1");
  CHECK(fact_value(*cert, "c") == "-2");
  CHECK(fact_value(*cert, "d") == "1");
  CHECK(fact_value(*cert, "flipped_coordinate") == "1");
}

TEST_CASE("no-PST certificate declines uniform parity and mixed factors", "[transfer][nopst]") {
  CHECK_FALSE(check_no_pst_mixed_parity(grid33()).has_value());
  CHECK_FALSE(check_no_pst_mixed_parity(tensor33()).has_value());
  CHECK_FALSE(check_no_pst_mixed_parity(make_neps({Factor::P2, Factor::P3}, {1, 3})).has_value());
}

TEST_CASE("negative and positive certificates never overlap", "[transfer][nopst]") {
  for (const auto& factors : {std::vector<Factor>(2, Factor::P3), std::vector<Factor>(3, Factor::P3)})
    for (int size : {1, 2})
      for (const auto& bits : omega_subsets(static_cast<int>(factors.size()), size)) {
        NepsSpec spec = make_neps(factors, bits);
        if (check_no_pst_mixed_parity(spec).has_value())
          CHECK_FALSE(check_pst_sufficient(spec).has_value());
      }
}

TEST_CASE("periodicity: uniform even parity is periodic at pi", "[transfer][periodic]") {
  NepsSpec spec = make_neps({Factor::P3, Factor::P3, Factor::P3, Factor::P3},
                            {pack_bits({1, 1, 0, 0}), pack_bits({1, 1, 1, 1})});
  Certificate cert = check_periodicity(spec);
  CHECK(cert.kind == CertKind::PERIODIC_AT);
  CHECK(cert.time->describe() == "pi");
  CHECK(cert.holds_all_vertices);
  CHECK(std::stod(*fact_value(cert, "max_deviation")) <= 1e-9);
  CHECK(fact_value(cert, "gamma") == "1");
}

TEST_CASE("periodicity: odd weight gives period 2*pi/sqrt2^k", "[transfer][periodic]") {
  Certificate p3 = check_periodicity(make_neps({Factor::P3}, {1}));
  CHECK(p3.kind == CertKind::PERIODIC_AT);
  CHECK(p3.time->describe() == "2*pi/sqrt2");
  Certificate grid = check_periodicity(grid33());
  CHECK(grid.time->describe() == "2*pi/sqrt2");
  Certificate tensor = check_periodicity(tensor33());
  CHECK(tensor.time->describe() == "pi");
}

TEST_CASE("periodicity: all-P2 walks are periodic at pi with sign (-1)^|Omega|",
          "[transfer][periodic]") {
  Certificate c4 = check_periodicity(make_neps({Factor::P2, Factor::P2}, {1, 2}));
  CHECK(c4.kind == CertKind::PERIODIC_AT);
  CHECK(c4.time->describe() == "pi");
  CHECK(fact_value(c4, "gamma") == "1");
  Certificate edge = check_periodicity(make_neps({Factor::P2}, {1}));
  CHECK(fact_value(edge, "gamma") == "-1");
  CHECK(std::stod(*fact_value(edge, "max_deviation")) <= 1e-9);
}

TEST_CASE("periodicity: mixed parity is refuted by the ratio test", "[transfer][periodic]") {
  Certificate cert = check_periodicity(mixed_parity33());
  CHECK(cert.kind == CertKind::NO_PST_RATIO);
  CHECK(cert.holds_all_vertices);
  REQUIRE(cert.ratio.has_value());
  CHECK_FALSE(ratio_is_rational(cert.ratio->lk - cert.ratio->ll, cert.ratio->lr - cert.ratio->ls));
}

TEST_CASE("periodicity: mixed factor product is refuted vertexwise", "[transfer][periodic]") {
  Certificate cert = check_periodicity(make_neps({Factor::P2, Factor::P3}, {1, 2}));
  CHECK(cert.kind == CertKind::NO_PST_RATIO);
  CHECK(cert.holds_all_vertices);
}

TEST_CASE("periodicity: inconclusive when ratios are rational and no rule applies",
          "[transfer][periodic]") {
  // P2 coordinate inert: the support is {-sqrt2, 0, sqrt2} everywhere, all
  // ratios rational, but no constructive rule covers mixed factor lists
  Certificate cert = check_periodicity(make_neps({Factor::P2, Factor::P3}, {2}));
  CHECK(cert.kind == CertKind::UNKNOWN);
  REQUIRE_FALSE(cert.notes.empty());
  CHECK(cert.notes[0].find("cannot refute") != std::string::npos);
}

TEST_CASE("uniform-parity evolution collapses to the minimum layer at tau_k",
          "[transfer][exactness]") {
  // distinct weights, even: tau_2
  NepsSpec full4 = make_neps({Factor::P3, Factor::P3, Factor::P3, Factor::P3},
                             {pack_bits({1, 1, 0, 0}), pack_bits({1, 1, 1, 1})});
  NepsSpec star4 = make_neps(full4.factors, {pack_bits({1, 1, 0, 0})});
  CHECK(dense_distance(full4, kPi / 2, star4, kPi / 2) <= 1e-9);
  // distinct weights, odd: tau_1
  NepsSpec full3 = make_neps({Factor::P3, Factor::P3, Factor::P3},
                             {pack_bits({1, 0, 0}), pack_bits({1, 1, 1})});
  NepsSpec star3 = make_neps(full3.factors, {pack_bits({1, 0, 0})});
  CHECK(dense_distance(full3, kPi / kSqrt2, star3, kPi / kSqrt2) <= 1e-9);
}

TEST_CASE("singleton layers are time-symmetric at their tau", "[transfer][exactness]") {
  for (int s = 1; s <= 3; ++s) {
    std::vector<Factor> factors(s, Factor::P3);
    NepsSpec spec = make_neps(factors, {(1u << s) - 1});
    double tau = kPi / std::pow(kSqrt2, s);
    CHECK(dense_distance(spec, -tau, spec, tau) <= 1e-9);
  }
}

TEST_CASE("the walk factors over the basis vectors at every time", "[transfer][exactness]") {
  auto check_factorization = [](const NepsSpec& spec) {
    long long n = spec.vertex_count();
    for (double t : seeded_times(10)) {
      auto product = test_support::identity(n);
      for (const BasisVector& beta : spec.omega)
        product = matmul(product, transition_matrix(make_neps(spec.factors, {beta.bits}), t, 4096));
      CHECK(max_abs_diff(product, transition_matrix(spec, t, 4096)) <= 1e-8);
    }
  };
  for (const auto& factors : factor_lists(2))
    for (int size : {1, 2})
      for (const auto& bits : omega_subsets(2, size)) check_factorization(make_neps(factors, bits));
  check_factorization(mixed_parity333());
  check_factorization(make_neps({Factor::P2, Factor::P3, Factor::P3}, {3, 6, 7}));
}

TEST_CASE("PGST case I on the smallest mixed-parity spec", "[transfer][pgst]") {
  auto result = check_pgst_mixed(mixed_parity33(), 1e-3);
  REQUIRE(result.has_value());
  CHECK(result->cert.kind == CertKind::PGST_CASE_I);
  CHECK(result->witness.kind == WitnessKind::PGST);
  CHECK(result->witness.source == Vertex{0, 0});
  CHECK(result->witness.target == Vertex{2, 0});
  CHECK(result->witness.time.describe() == "29*pi");
  CHECK(result->witness.time.value == Catch::Approx(29 * kPi).margin(1e-10));
  CHECK(result->witness.fidelity == Catch::Approx(0.99963319960579256).margin(1e-12));
  CHECK(result->witness.fidelity >= 1.0 - 1e-3);
  CHECK(result->witness.epsilon == 1e-3);
  CHECK(fact_value(result->cert, "l") == "1");
  CHECK(fact_value(result->cert, "q") == "29");
  CHECK(fact_value(result->cert, "layer_omega") == "{(1,0)}");
  CHECK(fact_value(result->cert, "layer_pst_pair") == "(0,0)->(2,0)");
  CHECK(fact_value(result->cert, "layer_pst_time") == "pi/sqrt2");
  CHECK(fact_value(result->cert, "delta").has_value());
  // the witness time is genuinely the first multiple of pi that works
  PairKernel kernel(mixed_parity33(), {0, 0}, {2, 0});
  for (long long q = 1; q < 29; ++q) CHECK(kernel.fidelity_at(q * kPi) < 1.0 - 1e-3);
}

TEST_CASE("PGST case II via the even layer", "[transfer][pgst]") {
  auto result = check_pgst_mixed(mixed_parity333(), 1e-3);
  REQUIRE(result.has_value());
  CHECK(result->cert.kind == CertKind::PGST_CASE_II);
  CHECK(result->witness.source == Vertex{0, 1, 0});
  CHECK(result->witness.target == Vertex{2, 1, 0});
  CHECK(result->witness.time.describe() == "41*pi/2");
  CHECK(result->witness.time.value == Catch::Approx(64.402649398590754).margin(1e-10));
  CHECK(result->witness.fidelity == Catch::Approx(0.99963324445768942).margin(1e-12));
  CHECK(fact_value(result->cert, "l") == "3");
  CHECK(fact_value(result->cert, "k") == "2");
  CHECK(fact_value(result->cert, "family") == "q*pi+tau_k");
  CHECK(fact_value(result->cert, "q") == "20");
  CHECK(fact_value(result->cert, "diophantine_p") == "13860");
  CHECK(fact_value(result->cert, "diophantine_q") == "9800");
  CHECK(fact_value(result->cert, "delta") == "0.00025000000000000001");
}

TEST_CASE("PGST search declines specs outside its cases", "[transfer][pgst]") {
  CHECK_FALSE(check_pgst_mixed(grid33(), 1e-3).has_value());            // uniform parity
  CHECK_FALSE(check_pgst_mixed(make_neps({Factor::P2, Factor::P3}, {1, 3}), 1e-3).has_value());
  // mixed parity with both star sums cancelling: neither case applies
  NepsSpec both_zero = make_neps(
      {Factor::P3, Factor::P3, Factor::P3, Factor::P3, Factor::P3},
      {pack_bits({1, 1, 1, 0, 0}), pack_bits({0, 0, 1, 1, 1}), pack_bits({1, 0, 1, 0, 1}),
       pack_bits({0, 1, 1, 1, 0}), pack_bits({1, 1, 0, 0, 0}), pack_bits({0, 1, 1, 0, 0}),
       pack_bits({0, 0, 1, 1, 0}), pack_bits({1, 0, 0, 1, 0})});
  ParityProfile p = parity_profile(both_zero);
  REQUIRE(p.mixed());
  REQUIRE_FALSE(p.odd.star_sum_nonzero());
  REQUIRE_FALSE(p.even.star_sum_nonzero());
  CHECK_FALSE(check_pgst_mixed(both_zero, 1e-3).has_value());
}

TEST_CASE("PGST witnesses are epsilon-monotone", "[transfer][pgst]") {
  auto loose = check_pgst_mixed(mixed_parity33(), 1e-3);
  auto tight = check_pgst_mixed(mixed_parity33(), 1e-4);
  REQUIRE(loose.has_value());
  REQUIRE(tight.has_value());
  CHECK(tight->witness.fidelity >= 1.0 - 1e-4);
  CHECK(tight->witness.time.value >= loose->witness.time.value);
}

TEST_CASE("PGST search reports bound exhaustion with guidance", "[transfer][pgst]") {
  SearchOptions opts;
  opts.max_q = 5;  // the smallest working q is 29
  CHECK_THROWS_AS(check_pgst_mixed(mixed_parity33(), 1e-3, opts), SearchBoundError);
  try {
    check_pgst_mixed(mixed_parity33(), 1e-3, opts);
  } catch (const SearchBoundError& e) {
    CHECK(std::string(e.what()).find("max-q") != std::string::npos);
  }
  CHECK_THROWS_AS(check_pgst_mixed(mixed_parity33(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(check_pgst_mixed(mixed_parity33(), 1.0), std::invalid_argument);
}

TEST_CASE("product transfer: edge times path", "[transfer][product]") {
  NepsSpec p2 = make_neps({Factor::P2}, {1});
  NepsSpec p3 = make_neps({Factor::P3}, {1});

  auto role = check_pgst_product(p2, p3, 1e-3);
  REQUIRE(role.has_value());
  CHECK(role->witness.source == Vertex{0, 0});
  CHECK(role->witness.target == Vertex{0, 2});
  CHECK(role->witness.time.describe() == "29*pi");
  CHECK(role->witness.fidelity == Catch::Approx(0.99963319960579233).margin(1e-12));
  CHECK(role->periodicity.kind == CertKind::PERIODIC_AT);
  CHECK(role->transfer.kind == CertKind::PST_SUFFICIENT);
  bool saw_m = false;
  for (const auto& [k, v] : role->facts)
    if (k == "m") {
      saw_m = true;
      CHECK(v == "29");
    }
  CHECK(saw_m);

  auto swapped = check_pgst_product(p3, p2, 1e-3);
  REQUIRE(swapped.has_value());
  CHECK(swapped->witness.source == Vertex{0, 0});  // in (P3, P2) order here
  CHECK(swapped->witness.target == Vertex{0, 1});
  CHECK(swapped->witness.time.describe() == "70*pi/sqrt2");
  CHECK(swapped->witness.fidelity == Catch::Approx(0.99996852981786322).margin(1e-12));
}

TEST_CASE("product analysis reports both roles in one coordinate order", "[transfer][product]") {
  NepsSpec p2 = make_neps({Factor::P2}, {1});
  NepsSpec p3 = make_neps({Factor::P3}, {1});
  ProductAnalysis analysis = analyze_product(p2, p3, 1e-3);
  REQUIRE(analysis.witnesses.size() == 2);
  CHECK(analysis.witnesses[0].source == Vertex{0, 0});
  CHECK(analysis.witnesses[0].target == Vertex{0, 2});
  CHECK(analysis.witnesses[1].source == Vertex{0, 0});
  CHECK(analysis.witnesses[1].target == Vertex{1, 0});
  CHECK(analysis.certificates.size() == 4);
  // one source, two distinct targets, neither with full transfer
  CHECK(analysis.witnesses[0].fidelity < 1.0 - 1e-9);
  CHECK(analysis.witnesses[1].fidelity < 1.0 - 1e-9);
  CHECK(analysis.witnesses[0].fidelity >= 1.0 - 1e-3);
  CHECK(analysis.witnesses[1].fidelity >= 1.0 - 1e-3);
}

TEST_CASE("product transfer: path times 4-cycle", "[transfer][product]") {
  NepsSpec p3 = make_neps({Factor::P3}, {1});
  NepsSpec c4 = make_neps({Factor::P2, Factor::P2}, {1, 2});
  ProductAnalysis analysis = analyze_product(p3, c4, 1e-3);
  REQUIRE(analysis.witnesses.size() == 2);
  CHECK(analysis.witnesses[0].source == Vertex{0, 0, 0});
  CHECK(analysis.witnesses[0].target == Vertex{0, 1, 1});
  CHECK(analysis.witnesses[0].time.describe() == "70*pi/sqrt2");
  CHECK(analysis.witnesses[0].fidelity == Catch::Approx(0.99993706062609888).margin(1e-12));
  CHECK(analysis.witnesses[1].source == Vertex{0, 0, 0});
  CHECK(analysis.witnesses[1].target == Vertex{2, 0, 0});
  CHECK(analysis.witnesses[1].time.describe() == "29*pi");
}

TEST_CASE("product transfer rejects rationally dependent times", "[transfer][product]") {
  // both closed-form times are rational multiples of pi
  NepsSpec tensor = tensor33();
  NepsSpec c4 = make_neps({Factor::P2, Factor::P2}, {1, 2});
  CHECK_THROWS_AS(check_pgst_product(tensor, c4, 1e-3), SpecError);
}

TEST_CASE("product roles that do not apply return absent", "[transfer][product]") {
  NepsSpec p3 = make_neps({Factor::P3}, {1});
  CHECK_FALSE(check_pgst_product(mixed_parity33(), p3, 1e-3).has_value());  // A not periodic
  NepsSpec zero_sum_p2 = make_neps({Factor::P2, Factor::P2}, {1, 2, 3});
  CHECK_FALSE(check_pgst_product(p3, zero_sum_p2, 1e-3).has_value());  // B has no pair
}

TEST_CASE("product search honours the time bound", "[transfer][product]") {
  NepsSpec p2 = make_neps({Factor::P2}, {1});
  NepsSpec p3 = make_neps({Factor::P3}, {1});
  SearchOptions opts;
  opts.max_q = 5;  // the first working multiple is m = 29
  CHECK_THROWS_AS(check_pgst_product(p2, p3, 1e-3, opts), SearchBoundError);
}

TEST_CASE("fidelity sweep hits the transfer peak on the grid it promises", "[transfer][sweep]") {
  NepsSpec p3 = make_neps({Factor::P3}, {1});
  auto series = fidelity_sweep(p3, {0}, {2}, 2 * kPi / kSqrt2, 3);
  REQUIRE(series.size() == 3);
  CHECK(series[0].first == 0.0);
  CHECK(series[0].second == Catch::Approx(0.0).margin(1e-12));
  CHECK(series[1].first == Catch::Approx(kPi / kSqrt2).margin(1e-12));
  CHECK(series[1].second >= 1.0 - 1e-9);
  CHECK(series[2].second == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("fidelity sweep of a vertex against itself starts at one", "[transfer][sweep]") {
  auto series = fidelity_sweep(grid33(), {1, 1}, {1, 1}, 5.0, 11);
  CHECK(series[0].first == 0.0);
  CHECK(series[0].second == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("long product sweep approaches but never reaches full transfer", "[transfer][sweep]") {
  NepsSpec box = make_neps({Factor::P2, Factor::P3}, {1, 2});
  auto series = fidelity_sweep(box, {0, 0}, {0, 2}, 100 * kPi, 5000);
  double best = 0.0;
  for (const auto& [t, fid] : series) best = std::max(best, fid);
  CHECK(best >= 0.99);
  CHECK(best < 1.0 - 1e-9);
}

TEST_CASE("fidelity sweep validates its arguments", "[transfer][sweep]") {
  NepsSpec p3 = make_neps({Factor::P3}, {1});
  CHECK_THROWS_AS(fidelity_sweep(p3, {0}, {2}, 1.0, 1), SpecError);
  CHECK_THROWS_AS(fidelity_sweep(p3, {0}, {2}, 0.0, 10), SpecError);
  CHECK_THROWS_AS(fidelity_sweep(p3, {0}, {3}, 1.0, 10), SpecError);
}
