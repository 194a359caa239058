#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dpct/dv2sm/blocks.hpp"
#include "dpct/dv2sm/model.hpp"
#include "dpct/dv2sm/selective_scan.hpp"
#include "grad_check.hpp"
#include "small_model.hpp"

using namespace dpct;
using namespace dpct::dv2sm;
using dpct::testing::random_leaf;
using dpct::testing::random_values;
using dpct::testing::worst_fd_error;

namespace {

// Step-by-step recurrence, one channel and one state at a time, h kept as a scalar.
std::vector<double> naive_scan(int E, int N, int L, const std::vector<double>& u, const std::vector<double>& delta,
                               const std::vector<double>& A, const std::vector<double>& B, const std::vector<double>& C,
                               const std::vector<double>& D, const std::vector<int>& order) {
  std::vector<double> y(static_cast<std::size_t>(E) * L, 0.0);
  for (int e = 0; e < E; ++e) {
    for (int t = 0; t < L; ++t) y[e * L + order[t]] = D[e] * u[e * L + order[t]];
    for (int n = 0; n < N; ++n) {
      double h = 0.0;
      for (int t = 0; t < L; ++t) {
        const int p = order[t];
        const double dt = delta[e * L + p];
        h = std::exp(dt * A[e * N + n]) * h + dt * B[n * L + p] * u[e * L + p];
        y[e * L + p] += C[n * L + p] * h;
      }
    }
  }
  return y;
}

std::vector<std::vector<int>> oracle_orders(int H, int W) {
  std::vector<int> row, col;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) row.push_back(y * W + x);
  for (int x = 0; x < W; ++x)
    for (int y = 0; y < H; ++y) col.push_back(y * W + x);
  std::vector<int> rrow(row.rbegin(), row.rend()), rcol(col.rbegin(), col.rend());
  return {row, rrow, col, rcol};
}

double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::abs(b[i]));
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  return diff / std::max(scale, 1e-300);
}

// Independent SS2D scan: recomputes every projection with explicit loops.
std::vector<double> oracle_ss2d_scan(const SS2D& m, const std::vector<double>& u, int E, int H, int W) {
  const int N = m.config().state_dim, R = m.config().rank(), L = H * W;
  std::vector<double> total(static_cast<std::size_t>(E) * L, 0.0);
  const auto orders = oracle_orders(H, W);
  for (int k = 0; k < 4; ++k) {
    const ScanDirection& d = m.dirs[k];
    const auto xw = d.x_proj.weight.value();
    std::vector<double> proj(static_cast<std::size_t>(R + 2 * N) * L, 0.0);
    for (int o = 0; o < R + 2 * N; ++o)
      for (int p = 0; p < L; ++p)
        for (int e = 0; e < E; ++e) proj[o * L + p] += xw[o * E + e] * u[e * L + p];
    std::vector<double> delta(static_cast<std::size_t>(E) * L), A(static_cast<std::size_t>(E) * N);
    for (int e = 0; e < E; ++e)
      for (int p = 0; p < L; ++p) {
        double z = d.dt_proj.bias.value()[e];
        for (int r = 0; r < R; ++r) z += d.dt_proj.weight.value()[e * R + r] * proj[r * L + p];
        delta[e * L + p] = std::log1p(std::exp(z));
      }
    for (int i = 0; i < E * N; ++i) A[i] = -std::exp(d.A_log.value()[i]);
    const std::vector<double> B(proj.begin() + R * L, proj.begin() + (R + N) * L);
    const std::vector<double> C(proj.begin() + (R + N) * L, proj.end());
    const std::vector<double> Dv(d.D.value().begin(), d.D.value().end());
    const auto y = naive_scan(E, N, L, u, delta, A, B, C, Dv, orders[k]);
    for (std::size_t i = 0; i < y.size(); ++i) total[i] += y[i];
  }
  return total;
}

// Randomizes every parameter so no branch is degenerate.
void randomize(const nn::ParamList& params, std::uint64_t seed, double amp = 0.3) {
  std::uint64_t s = seed;
  for (const auto& p : params) {
    ag::Var v = p.var;
    const auto r = random_values(v.numel(), ++s, -amp, amp);
    auto& val = v.mutable_value();
    for (std::size_t i = 0; i < val.size(); ++i) val[i] += r[i];
  }
}

nn::ParamList collect(const SS2D& m) {
  nn::ParamList out;
  m.collect("", out);
  return out;
}

}  // namespace

// ---------------------------------------------------------------- selective scan

TEST(SelectiveScan, LengthOneUnrollsOnce) {
  const std::vector<double> u{0.7}, delta{0.3}, A{-1.5, -0.5}, B{0.2, -0.4}, C{1.1, 0.9}, D{0.25};
  const std::vector<int> order{0};
  const auto y = selective_scan_1d({1, 2, 1, u, delta, A, B, C, D}, order);
  const double expected = 1.1 * (0.3 * 0.2 * 0.7) + 0.9 * (0.3 * -0.4 * 0.7) + 0.25 * 0.7;
  EXPECT_NEAR(y[0], expected, 1e-15);
}

TEST(SelectiveScan, ZeroStateMatrixGivesCumulativeSum) {
  const int L = 10;
  const auto u = random_values(L, 1), delta = random_values(L, 2, 0.1, 1.0), B = random_values(L, 3);
  const std::vector<double> A{0.0}, C(L, 1.0), D{0.0};
  std::vector<int> order(L);
  for (int t = 0; t < L; ++t) order[t] = t;
  const auto y = selective_scan_1d({1, 1, L, u, delta, A, B, C, D}, order);
  double cum = 0.0;
  for (int t = 0; t < L; ++t) {
    cum += delta[t] * B[t] * u[t];
    EXPECT_NEAR(y[t], cum, 1e-14);
  }
}

TEST(SelectiveScan, MatchesNaiveRecurrence) {
  const int E = 4, N = 8, L = 32;
  const auto u = random_values(E * L, 1), delta = random_values(E * L, 2, 0.01, 0.5);
  const auto A = random_values(E * N, 3, -3.0, -0.1), B = random_values(N * L, 4), C = random_values(N * L, 5);
  const auto D = random_values(E, 6);
  std::vector<int> order(L);
  for (int t = 0; t < L; ++t) order[t] = (t * 7) % L;
  const auto y = selective_scan_1d({E, N, L, u, delta, A, B, C, D}, order);
  EXPECT_LT(max_rel_diff(y, naive_scan(E, N, L, u, delta, A, B, C, D, order)), 1e-5);
}

TEST(SelectiveScan, RejectsNonPositiveDeltaAndBadOrder) {
  const std::vector<double> u{1, 1}, A{-1}, B{1, 1}, C{1, 1}, D{0};
  const std::vector<int> order{0, 1};
  EXPECT_THROW(selective_scan_1d({1, 1, 2, u, std::vector<double>{0.1, 0.0}, A, B, C, D}, order), ArgumentError);
  EXPECT_THROW(selective_scan_1d({1, 1, 2, u, std::vector<double>{0.1, -1.0}, A, B, C, D}, order), ArgumentError);
  const std::vector<int> dup{0, 0};
  EXPECT_THROW(selective_scan_1d({1, 1, 2, u, std::vector<double>{0.1, 0.1}, A, B, C, D}, dup), ArgumentError);
}

TEST(SelectiveScan, StateStaysBoundedOnLargeInputs) {
  const int E = 3, N = 16, H = 8, W = 8, L = H * W;
  const auto u = random_values(E * L, 7, -10.0, 10.0), delta = random_values(E * L, 8, 1e-3, 5.0);
  std::vector<double> A(E * N);
  for (int e = 0; e < E; ++e)
    for (int n = 0; n < N; ++n) A[e * N + n] = -(n + 1.0);
  for (int e = 0; e < E; ++e)
    for (int p = 0; p < L; ++p)
      for (int n = 0; n < N; ++n) EXPECT_LE(std::exp(delta[e * L + p] * A[e * N + n]), 1.0);
  const auto B = random_values(N * L, 9, -10.0, 10.0), C = random_values(N * L, 10, -10.0, 10.0);
  const auto D = random_values(E, 11);
  const auto y = selective_scan_1d({E, N, L, u, delta, A, B, C, D}, scan_orders(H, W)[3]);
  for (double v : y) EXPECT_TRUE(std::isfinite(v));
}

TEST(SelectiveScan, GradientsMatchFiniteDifferences) {
  const int E = 3, N = 4, H = 5, W = 9;  // 45 positions spans two checkpoint chunks
  ag::Var u = random_leaf({E, H, W}, 1), delta = random_leaf({E, H, W}, 2, 0.05, 0.8);
  ag::Var A = random_leaf({E, N}, 3, -2.0, -0.2), B = random_leaf({N, H, W}, 4), C = random_leaf({N, H, W}, 5);
  ag::Var D = random_leaf({E}, 6);
  const auto weights = ag::Var::constant({E, H, W}, random_values(E * H * W, 7));
  const auto order = scan_orders(H, W)[2];
  auto loss = [&] { return ag::sum(ag::mul(selective_scan(u, delta, A, B, C, D, order), weights)); };
  for (ag::Var* v : {&u, &delta, &A, &B, &C, &D}) EXPECT_LT(worst_fd_error(loss, *v, 20, 11), 1e-6);
}

// ---------------------------------------------------------------- scan orders

TEST(ScanOrders, EachIsAPermutationAndMatchesDefinition) {
  for (auto [H, W] : {std::pair{1, 1}, std::pair{3, 5}, std::pair{8, 2}}) {
    const auto o = scan_orders(H, W);
    const auto ref = oracle_orders(H, W);
    for (int k = 0; k < 4; ++k) {
      std::set<int> s(o[k].begin(), o[k].end());
      EXPECT_EQ(s.size(), static_cast<std::size_t>(H * W));
      EXPECT_EQ(*s.begin(), 0);
      EXPECT_EQ(*s.rbegin(), H * W - 1);
      EXPECT_EQ(o[k], ref[k]);
    }
  }
}

// ---------------------------------------------------------------- SS2D

TEST(SS2D, ScanMatchesFourNaiveRecurrencesOnAllShapes) {
  for (int C : {1, 2, 4})
    for (int H : {2, 4, 8})
      for (int W : {2, 4, 8}) {
        Rng rng = make_rng(C * 100 + H * 10 + W);
        SS2D m({C, 4, 1, 0, 3}, rng);
        const auto u = random_values(C * H * W, H * W + C, -2.0, 2.0);
        ag::NoGradGuard g;
        const ag::Var y = m.scan(ag::Var::leaf({C, H, W}, u, false));
        EXPECT_LT(max_rel_diff(y.value(), oracle_ss2d_scan(m, u, C, H, W)), 1e-5) << C << "x" << H << "x" << W;
      }
}

TEST(SS2D, SingleRowReducesToOneDimensionalScan) {
  const int C = 3, L = 11;
  Rng rng = make_rng(5);
  SS2D m({C, 4, 1, 0, 3}, rng);
  const auto u = random_values(C * L, 3);
  ag::NoGradGuard g;
  const ag::Var uv = ag::Var::leaf({C, 1, L}, u, false);
  const auto branches = m.scan_branches(uv);
  const ScanDirection& d = m.dirs[0];
  const ag::Var proj = d.x_proj(uv);
  const int R = m.config().rank(), N = 4;
  const ag::Var delta = ag::softplus(d.dt_proj(ag::slice_channels(proj, 0, R)));
  const ag::Var A = ag::neg_exp(d.A_log);
  std::vector<int> order(L);
  for (int t = 0; t < L; ++t) order[t] = t;
  const auto y = selective_scan_1d({C, N, L, u, delta.value(), A.value(), ag::slice_channels(proj, R, N).value(),
                                    ag::slice_channels(proj, R + N, N).value(), d.D.value()},
                                   order);
  EXPECT_LT(max_rel_diff(branches[0].value(), y), 1e-12);
}

TEST(SS2D, PreservesShape) {
  Rng rng = make_rng(9);
  SS2D m({6, 4, 2, 0, 3}, rng);
  for (auto [H, W] : {std::pair{3, 7}, std::pair{8, 8}}) {
    const ag::Var y = m(random_leaf({6, H, W}, 1));
    EXPECT_EQ(y.shape(), (std::vector<int>{6, H, W}));
  }
}

// ---------------------------------------------------------------- MVB

TEST(MVB, ShapeImpulseSupportAndZeroInput) {
  Rng rng = make_rng(2);
  MVB m(3, {3, 5, 7}, rng);
  EXPECT_EQ(m(random_leaf({3, 9, 6}, 1)).shape(), (std::vector<int>{3, 9, 6}));

  for (auto& c : m.convs) {
    auto& b = c.bias.mutable_value();
    std::fill(b.begin(), b.end(), 0.0);
    for (double& w : c.weight.mutable_value()) w = 0.5 + std::abs(w);  // no accidental zero taps
  }
  const int S = 15;
  std::vector<double> impulse(3 * S * S, 0.0);
  for (int c = 0; c < 3; ++c) impulse[c * S * S + 7 * S + 7] = 1.0;
  const auto br = m.branches(ag::Var::constant({3, S, S}, impulse));
  for (std::size_t k = 0; k < 3; ++k) {
    const int K = 3 + 2 * static_cast<int>(k), h = K / 2;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
          const bool inside = std::abs(y - 7) <= h && std::abs(x - 7) <= h;
          EXPECT_EQ(br[k].value()[(c * S + y) * S + x] != 0.0, inside) << "kernel " << K;
        }
  }

  m.fuse.zero();
  const ag::Var z = m(ag::Var::constant({3, 5, 5}, std::vector<double>(75, 0.0)));
  for (double v : z.value()) EXPECT_EQ(v, 0.0);
}

// ---------------------------------------------------------------- GL2SB / VSSG

TEST(GL2SB, ZeroBranchesGiveIdentityAndShapeHolds) {
  Rng rng = make_rng(3);
  Gl2sbConfig cfg;
  cfg.ssm = {4, 4, 2, 0, 3};
  GL2SB b(cfg, rng);
  const ag::Var x = random_leaf({4, 6, 5}, 2);
  EXPECT_EQ(b(x).shape(), x.shape());
  b.zero_branches();
  const ag::Var y = b(x);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.value()[i], x.value()[i]);
  EXPECT_THROW(b(random_leaf({3, 6, 5}, 3)), ArgumentError);
}

TEST(GL2SB, SkipScaleGradientMatchesFiniteDifferences) {
  Rng rng = make_rng(4);
  Gl2sbConfig cfg;
  cfg.ssm = {4, 4, 1, 0, 3};
  GL2SB b(cfg, rng);
  nn::ParamList params;
  b.collect("", params);
  randomize(params, 77, 0.2);
  const ag::Var x = random_leaf({4, 5, 5}, 5);
  const ag::Var target = ag::Var::constant({4, 5, 5}, random_values(100, 6));
  EXPECT_LT(worst_fd_error([&] { return ag::mse(b(x), target); }, b.skip_scale, 4, 1), 1e-4);
}

TEST(VSSG, ZeroConvIsIdentityAndSkipMatters) {
  Rng rng = make_rng(5);
  Gl2sbConfig cfg;
  cfg.ssm = {4, 4, 1, 0, 3};
  VSSG g(cfg, 3, rng);
  const ag::Var x = random_leaf({4, 6, 6}, 8);
  EXPECT_EQ(g(x).shape(), x.shape());
  EXPECT_NE(g(x).value()[0], g.body(x).value()[0]);
  g.conv.zero();
  const ag::Var y = g(x);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.value()[i], x.value()[i]);
}

// ---------------------------------------------------------------- model

TEST(Model, ZeroHeadIsExactIdentityAndShapesHold) {
  const Model m(dpct::testing::small_model_config());
  for (auto [H, W] : {std::pair{64, 96}, std::pair{64, 64}, std::pair{20, 36}}) {
    Image img(H, W);
    img.data() = random_values(static_cast<std::size_t>(H) * W, H + W, 0.0, 1.0);
    const Image out = m.enhance(img);
    EXPECT_EQ(out, img);
  }
}

TEST(Model, RejectsNonFiniteInput) {
  const Model m(dpct::testing::small_model_config());
  Image img(16, 16, 0.5);
  img(3, 4) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(m.enhance(img), ArgumentError);
}

TEST(Model, ParameterCountIsDeterministicAndNamesAreUnique) {
  const auto cfg = dpct::testing::small_model_config(3);
  const Model a(cfg), b(cfg);
  EXPECT_EQ(a.parameter_count(), b.parameter_count());
  std::set<std::string> names;
  for (const auto& p : a.parameters()) EXPECT_TRUE(names.insert(p.name).second) << p.name;
  EXPECT_TRUE(names.count("groups.3.blocks.2.ss2d.dirs.3.A_log"));
  EXPECT_TRUE(names.count("videx.ldeb.conv1.weight"));
  EXPECT_TRUE(names.count("head.bias"));
  auto cfg2 = cfg;
  cfg2.embed_dim = 12;
  EXPECT_NE(Model(cfg2).parameter_count(), a.parameter_count());
}

TEST(Model, ConfigJsonRoundTrips) {
  auto cfg = dpct::testing::small_model_config(7);
  cfg.mvb_kernels = {3, 9};
  const ModelConfig back = ModelConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json(), cfg.to_json());
  nlohmann::json bad = cfg.to_json();
  bad["mvb_kernels"] = {4};
  EXPECT_THROW(ModelConfig::from_json(bad), ArgumentError);
}

TEST(Model, FullModelGradientsMatchFiniteDifferences) {
  auto cfg = dpct::testing::small_model_config(11);
  cfg.zero_init_head = false;
  const Model m(cfg);
  const auto params = m.parameters();
  randomize(params, 5, 0.05);
  Image img(16, 16);
  img.data() = random_values(256, 3, 0.0, 1.0);
  const FeatureMap Z = m.extractor.semantic(img);
  const ag::Var x = ag::Var::from(img);
  const ag::Var target = ag::Var::constant({1, 16, 16}, random_values(256, 4, 0.0, 1.0));
  std::vector<ag::Var> vars;
  for (const auto& p : params) vars.push_back(p.var);
  const auto r = dpct::testing::fd_check_params([&] { return ag::mse(m.forward(x, Z), target); }, vars, 20, 9, 1e-4);
  EXPECT_EQ(r.checked, 20);
  EXPECT_LT(r.worst, 1e-3);
}
