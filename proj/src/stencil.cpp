#include "confspec/stencil.hpp"

#include <cmath>
#include <numbers>

#include "confspec/error.hpp"

namespace confspec {

Scheme parse_scheme(std::string_view name) {
  if (name == "spectral") return Scheme::Spectral;
  if (name == "fd4") return Scheme::FD4;
  if (name == "fd2") return Scheme::FD2;
  fail(ErrorKind::InvalidArgument, "unknown derivative scheme '" + std::string(name) + "'");
}

std::string_view to_string(Scheme s) {
  switch (s) {
  case Scheme::Spectral: return "spectral";
  case Scheme::FD4: return "fd4";
  case Scheme::FD2: return "fd2";
  }
  return "?";
}

int nominal_order(Scheme s) { return s == Scheme::FD2 ? 2 : 4; }

namespace {

void spectral_weights(int n, double period, std::vector<double>& w1, std::vector<double>& w2) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  w1.assign(n, 0.0);
  w2.assign(n, 0.0);
  for (int m = 0; m < n; ++m) {
    double s1 = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
      int ks = k <= n / 2 ? k : k - n;
      const double kappa = two_pi * ks / period;
      const double phase = two_pi * static_cast<double>((static_cast<long>(k) * m) % n) / n;
      const bool nyquist = (n % 2 == 0) && (k == n / 2);
      if (!nyquist) s1 += kappa * std::sin(phase);
      s2 -= kappa * kappa * std::cos(phase);
    }
    w1[m] = s1 / n;
    w2[m] = s2 / n;
  }
}

void add_tap(std::vector<double>& w, int offset, double weight) {
  const int n = static_cast<int>(w.size());
  w[((offset % n) + n) % n] += weight;
}

void fd_weights(Scheme scheme, int n, double h, std::vector<double>& w1, std::vector<double>& w2) {
  w1.assign(n, 0.0);
  w2.assign(n, 0.0);
  if (scheme == Scheme::FD2) {
    add_tap(w1, 1, 0.5 / h);
    add_tap(w1, -1, -0.5 / h);
    add_tap(w2, 1, 1.0 / (h * h));
    add_tap(w2, -1, 1.0 / (h * h));
  } else {
    add_tap(w1, 1, 8.0 / (12.0 * h));
    add_tap(w1, -1, -8.0 / (12.0 * h));
    add_tap(w1, 2, -1.0 / (12.0 * h));
    add_tap(w1, -2, 1.0 / (12.0 * h));
    add_tap(w2, 1, 16.0 / (12.0 * h * h));
    add_tap(w2, -1, 16.0 / (12.0 * h * h));
    add_tap(w2, 2, -1.0 / (12.0 * h * h));
    add_tap(w2, -2, -1.0 / (12.0 * h * h));
  }
}

} // namespace

Differentiator::Differentiator(const Grid& grid, Scheme scheme) : grid_(grid), scheme_(scheme) {
  const int dim = grid.dim();
  w1_.resize(dim);
  w2_.resize(dim);
  taps1_.resize(dim);
  taps2_.resize(dim);
  for (int a = 0; a < dim; ++a) {
    const int n = grid.resolution(a);
    if (scheme == Scheme::Spectral)
      spectral_weights(n, grid.period(a), w1_[a], w2_[a]);
    else
      fd_weights(scheme, n, grid.spacing(a), w1_[a], w2_[a]);

    // Exact antisymmetry / symmetry and zero row sums.
    auto& w1 = w1_[a];
    auto& w2 = w2_[a];
    w1[0] = 0.0;
    for (int m = 1; m <= n / 2; ++m) {
      const double odd = 0.5 * (w1[m] - w1[n - m]);
      w1[m] = odd;
      w1[n - m] = -odd;
      const double even = 0.5 * (w2[m] + w2[n - m]);
      w2[m] = even;
      w2[n - m] = even;
    }
    double off = 0.0;
    for (int m = 1; m < n; ++m) off += w2[m];
    w2[0] = -off;

    for (int m = 1; 2 * m < n; ++m)
      if (w1[m] != 0.0) taps1_[a].push_back({m, w1[m]});
    for (int m = 1; 2 * m <= n; ++m)
      if (w2[m] != 0.0) taps2_[a].push_back({m, w2[m]});
  }
}

namespace {

template <class LineOp>
void for_each_line(const Grid& grid, int axis, LineOp&& op) {
  const std::size_t stride = grid.stride(axis);
  const std::size_t outer = grid.size() / (stride * grid.resolution(axis));
  const std::size_t block = stride * grid.resolution(axis);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t inner = 0; inner < stride; ++inner) op(o * block + inner, stride);
}

} // namespace

void Differentiator::first(std::span<const double> in, std::span<double> out, int axis) const {
  const int n = grid_.resolution(axis);
  const auto& taps = taps1_[axis];
  std::vector<double> buf(2 * n);
  for_each_line(grid_, axis, [&](std::size_t start, std::size_t stride) {
    for (int i = 0; i < n; ++i) buf[i] = buf[i + n] = in[start + i * stride];
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (const Tap& t : taps) s += t.weight * (buf[j + t.offset] - buf[j + n - t.offset]);
      out[start + j * stride] = s;
    }
  });
}

void Differentiator::second(std::span<const double> in, std::span<double> out, int axis) const {
  const int n = grid_.resolution(axis);
  const auto& taps = taps2_[axis];
  std::vector<double> buf(2 * n);
  for_each_line(grid_, axis, [&](std::size_t start, std::size_t stride) {
    for (int i = 0; i < n; ++i) buf[i] = buf[i + n] = in[start + i * stride];
    for (int j = 0; j < n; ++j) {
      const double c = buf[j];
      double s = 0.0;
      for (const Tap& t : taps) {
        if (2 * t.offset == n)
          s += t.weight * (buf[j + t.offset] - c);
        else
          s += t.weight * ((buf[j + t.offset] - c) + (buf[j + n - t.offset] - c));
      }
      out[start + j * stride] = s;
    }
  });
}

std::vector<double> Differentiator::first(std::span<const double> in, int axis) const {
  std::vector<double> out(in.size());
  first(in, out, axis);
  return out;
}

std::vector<double> Differentiator::second(std::span<const double> in, int axis) const {
  std::vector<double> out(in.size());
  second(in, out, axis);
  return out;
}

std::vector<double> Differentiator::mixed(std::span<const double> in, int a, int b) const {
  if (a == b) return second(in, a);
  const auto tmp = first(in, b);
  return first(tmp, a);
}

} // namespace confspec
