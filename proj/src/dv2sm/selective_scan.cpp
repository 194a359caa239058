#include "dpct/dv2sm/selective_scan.hpp"

#include <cmath>
#include <memory>

#include <Eigen/Core>

#include "dpct/core/error.hpp"

namespace dpct::dv2sm {

namespace {

constexpr int kChunk = 32;

void check_order(std::span<const int> order, int length) {
  require(static_cast<int>(order.size()) == length, "selective_scan: order length must equal the sequence length");
  std::vector<char> seen(static_cast<std::size_t>(length), 0);
  for (int p : order) {
    require(p >= 0 && p < length && !seen[p], "selective_scan: order must be a permutation of positions");
    seen[p] = 1;
  }
}

void check_delta(std::span<const double> delta) {
  for (double d : delta) require(d > 0.0 && std::isfinite(d), "selective_scan: delta must be positive and finite");
}

// (N, L) -> (L, N) so the per-step state loop reads contiguous memory.
std::vector<double> transpose(std::span<const double> m, int rows, int cols) {
  std::vector<double> t(m.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) t[static_cast<std::size_t>(c) * rows + r] = m[static_cast<std::size_t>(r) * cols + c];
  return t;
}

// as[j * N + n] = exp(delta_p * A[n]) for the steps t0..t1-1, evaluated as one vectorized batch.
// `as` must come from an aligned Eigen array so the vector/scalar split, and hence every
// result bit, does not depend on where the allocator placed the buffer.
void chunk_decay(const double* a_row, const double* d_row, std::span<const int> order, int t0, int t1, int N,
                 double* as) {
  for (int t = t0; t < t1; ++t) {
    const double dt = d_row[order[t]];
    double* row = as + static_cast<std::size_t>(t - t0) * N;
    for (int n = 0; n < N; ++n) row[n] = dt * a_row[n];
  }
  Eigen::Map<Eigen::ArrayXd, Eigen::AlignedMax> m(as, static_cast<Eigen::Index>(t1 - t0) * N);
  m = m.exp();
}

struct Forward {
  std::vector<double> y;
  std::vector<double> checkpoints;  // (E, n_chunks, N): state entering each chunk
};

Forward run_forward(const ScanOperands& op, std::span<const int> order, const std::vector<double>& Bt,
                    const std::vector<double>& Ct, bool keep_checkpoints) {
  const int E = op.channels, N = op.states, L = op.length;
  const int n_chunks = (L + kChunk - 1) / kChunk;
  Forward f;
  f.y.assign(static_cast<std::size_t>(E) * L, 0.0);
  if (keep_checkpoints) f.checkpoints.assign(static_cast<std::size_t>(E) * n_chunks * N, 0.0);
  std::vector<double> h(static_cast<std::size_t>(N));
  Eigen::ArrayXd as(static_cast<Eigen::Index>(kChunk) * N);
  for (int e = 0; e < E; ++e) {
    std::fill(h.begin(), h.end(), 0.0);
    const double* a_row = op.A.data() + static_cast<std::size_t>(e) * N;
    const double* u_row = op.u.data() + static_cast<std::size_t>(e) * L;
    const double* d_row = op.delta.data() + static_cast<std::size_t>(e) * L;
    double* y_row = f.y.data() + static_cast<std::size_t>(e) * L;
    for (int k = 0; k < n_chunks; ++k) {
      const int t0 = k * kChunk, t1 = std::min(L, t0 + kChunk);
      if (keep_checkpoints)
        std::copy(h.begin(), h.end(), f.checkpoints.begin() + (static_cast<std::size_t>(e) * n_chunks + k) * N);
      chunk_decay(a_row, d_row, order, t0, t1, N, as.data());
      for (int t = t0; t < t1; ++t) {
        const int p = order[t];
        const double uu = u_row[p], du = d_row[p] * uu;
        const double* a = as.data() + static_cast<std::size_t>(t - t0) * N;
        const double* b = Bt.data() + static_cast<std::size_t>(p) * N;
        const double* c = Ct.data() + static_cast<std::size_t>(p) * N;
        for (int n = 0; n < N; ++n) h[n] = a[n] * h[n] + du * b[n];
        double acc = 0.0;
        for (int n = 0; n < N; ++n) acc += c[n] * h[n];
        y_row[p] = acc + op.D[e] * uu;
      }
    }
  }
  return f;
}

}  // namespace

std::vector<double> selective_scan_1d(const ScanOperands& op, std::span<const int> order) {
  const std::size_t E = op.channels, N = op.states, L = op.length;
  require(op.channels > 0 && op.states > 0 && op.length > 0, "selective_scan: empty operands");
  require(op.u.size() == E * L && op.delta.size() == E * L && op.A.size() == E * N && op.B.size() == N * L &&
              op.C.size() == N * L && op.D.size() == E,
          "selective_scan: operand sizes are inconsistent");
  check_delta(op.delta);
  check_order(order, op.length);
  const auto Bt = transpose(op.B, op.states, op.length), Ct = transpose(op.C, op.states, op.length);
  return run_forward(op, order, Bt, Ct, false).y;
}

std::array<std::vector<int>, 4> scan_orders(int height, int width) {
  require(height > 0 && width > 0, "scan_orders: extents must be positive");
  const int L = height * width;
  std::array<std::vector<int>, 4> o;
  for (auto& v : o) v.resize(static_cast<std::size_t>(L));
  for (int t = 0; t < L; ++t) {
    o[0][t] = t;
    o[1][t] = L - 1 - t;
    o[2][t] = (t % height) * width + t / height;
  }
  for (int t = 0; t < L; ++t) o[3][t] = o[2][L - 1 - t];
  return o;
}

ag::Var selective_scan(const ag::Var& u, const ag::Var& delta, const ag::Var& A, const ag::Var& B, const ag::Var& C,
                       const ag::Var& D, std::vector<int> order) {
  require(u.rank() == 3 && delta.shape() == u.shape(), "selective_scan: u and delta must share an (E, H, W) shape");
  const int E = u.dim(0), H = u.dim(1), W = u.dim(2), L = H * W;
  require(A.rank() == 2 && A.dim(0) == E, "selective_scan: A must be (E, N)");
  const int N = A.dim(1);
  require(B.rank() == 3 && B.dim(0) == N && B.dim(1) == H && B.dim(2) == W, "selective_scan: B must be (N, H, W)");
  require(C.shape() == B.shape(), "selective_scan: C must be (N, H, W)");
  require(D.numel() == static_cast<std::size_t>(E), "selective_scan: D must have E entries");
  check_delta(delta.value());
  check_order(order, L);

  const ScanOperands op{E, N, L, u.value(), delta.value(), A.value(), B.value(), C.value(), D.value()};
  auto Bt = std::make_shared<std::vector<double>>(transpose(op.B, N, L));
  auto Ct = std::make_shared<std::vector<double>>(transpose(op.C, N, L));
  const bool tracking = ag::grad_enabled() &&
                        (u.requires_grad() || delta.requires_grad() || A.requires_grad() || B.requires_grad() ||
                         C.requires_grad() || D.requires_grad());
  Forward f = run_forward(op, order, *Bt, *Ct, tracking);
  auto ck = std::make_shared<std::vector<double>>(std::move(f.checkpoints));
  auto ord = std::make_shared<std::vector<int>>(std::move(order));

  return ag::make_result(
      u.shape(), std::move(f.y), {u, delta, A, B, C, D},
      [E, N, L, Bt, Ct, ck, ord](ag::Node& out) {
        ag::Node &nu = *out.inputs[0], &nd = *out.inputs[1], &nA = *out.inputs[2], &nB = *out.inputs[3],
                 &nC = *out.inputs[4], &nD = *out.inputs[5];
        const int n_chunks = (L + kChunk - 1) / kChunk;
        std::vector<double> dBt(static_cast<std::size_t>(L) * N, 0.0), dCt(static_cast<std::size_t>(L) * N, 0.0);
        std::vector<double> dA(static_cast<std::size_t>(E) * N, 0.0), dD(E, 0.0);
        std::vector<double> du(static_cast<std::size_t>(E) * L, 0.0), ddelta(static_cast<std::size_t>(E) * L, 0.0);
        std::vector<double> hs(static_cast<std::size_t>(kChunk + 1) * N);
        Eigen::ArrayXd as(static_cast<Eigen::Index>(kChunk) * N);
        std::vector<double> gh(static_cast<std::size_t>(N)), g(gh.size()), ga(gh.size());
        const std::vector<int>& order = *ord;
        for (int e = 0; e < E; ++e) {
          std::fill(gh.begin(), gh.end(), 0.0);
          const double* a_row = nA.value.data() + static_cast<std::size_t>(e) * N;
          const double* u_row = nu.value.data() + static_cast<std::size_t>(e) * L;
          const double* d_row = nd.value.data() + static_cast<std::size_t>(e) * L;
          const double* gy_row = out.grad.data() + static_cast<std::size_t>(e) * L;
          const double De = nD.value[e];
          for (int k = n_chunks - 1; k >= 0; --k) {
            const int t0 = k * kChunk, t1 = std::min(L, t0 + kChunk);
            // hs[j] holds the state after step t0 + j - 1; hs[0] is the checkpoint.
            std::copy_n(ck->begin() + (static_cast<std::size_t>(e) * n_chunks + k) * N, N, hs.begin());
            chunk_decay(a_row, d_row, order, t0, t1, N, as.data());
            for (int t = t0; t < t1; ++t) {
              const int p = order[t], j = t - t0;
              const double dtu = d_row[p] * u_row[p];
              const double* b = Bt->data() + static_cast<std::size_t>(p) * N;
              const double* a = as.data() + static_cast<std::size_t>(j) * N;
              const double* hp = hs.data() + static_cast<std::size_t>(j) * N;
              double* hn = hs.data() + static_cast<std::size_t>(j + 1) * N;
              for (int n = 0; n < N; ++n) hn[n] = a[n] * hp[n] + dtu * b[n];
            }
            double* dA_row = dA.data() + static_cast<std::size_t>(e) * N;
            for (int t = t1 - 1; t >= t0; --t) {
              const int p = order[t], j = t - t0;
              const double dt = d_row[p], uu = u_row[p], gy = gy_row[p], dtu = dt * uu;
              const double* b = Bt->data() + static_cast<std::size_t>(p) * N;
              const double* c = Ct->data() + static_cast<std::size_t>(p) * N;
              const double* a = as.data() + static_cast<std::size_t>(j) * N;
              const double* hp = hs.data() + static_cast<std::size_t>(j) * N;
              const double* hn = hs.data() + static_cast<std::size_t>(j + 1) * N;
              double* db = dBt.data() + static_cast<std::size_t>(p) * N;
              double* dc = dCt.data() + static_cast<std::size_t>(p) * N;
              for (int n = 0; n < N; ++n) {
                const double gn = gy * c[n] + gh[n];
                g[n] = gn;
                ga[n] = gn * hp[n] * a[n];
                dc[n] += gy * hn[n];
                dA_row[n] += ga[n] * dt;
                db[n] += gn * dtu;
                gh[n] = gn * a[n];
              }
              double gab = 0.0, gb = 0.0;
              for (int n = 0; n < N; ++n) {
                gab += ga[n] * a_row[n];
                gb += g[n] * b[n];
              }
              const double g_dt = gab + gb * uu, g_u = gy * De + gb * dt;
              du[static_cast<std::size_t>(e) * L + p] += g_u;
              ddelta[static_cast<std::size_t>(e) * L + p] += g_dt;
              dD[e] += gy * uu;
            }
          }
        }
        auto accumulate = [](ag::Node& n, const std::vector<double>& g) {
          if (!n.requires_grad) return;
          for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
        };
        accumulate(nu, du);
        accumulate(nd, ddelta);
        accumulate(nA, dA);
        accumulate(nD, dD);
        if (nB.requires_grad) accumulate(nB, transpose(dBt, L, N));
        if (nC.requires_grad) accumulate(nC, transpose(dCt, L, N));
      });
}

}  // namespace dpct::dv2sm
