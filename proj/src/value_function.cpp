#include "wavetrack/value_function.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace wavetrack {

static_assert(std::endian::native == std::endian::little, "WTVF I/O assumes little-endian host");

namespace {

constexpr char kMagic[4] = {'W', 'T', 'V', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void Put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T Get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("WTVF: truncated file");
  return v;
}

}  // namespace

void ValueFunction::Bracket(double t, int& lo, int& hi, double& weight) const {
  const int n = slice_count();
  if (n == 1 || t <= times.front()) {
    lo = hi = 0;
    weight = 0.0;
    return;
  }
  if (t >= times.back()) {
    lo = hi = n - 1;
    weight = 0.0;
    return;
  }
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  hi = static_cast<int>(it - times.begin());
  lo = hi - 1;
  weight = (t - times[lo]) / (times[hi] - times[lo]);
}

ValueQuery ValueFunction::value_at(std::span<const double> r, double t) const {
  const Stencil st = MakeStencil(grid, r);
  int lo, hi;
  double w;
  Bracket(t, lo, hi, w);
  double v = Interpolate(st, grid.dims(), slices[lo].data());
  if (hi != lo && w > 0.0) v = (1.0 - w) * v + w * Interpolate(st, grid.dims(), slices[hi].data());
  const bool t_out = t < times.front() || t > times.back();
  return {v, st.extrapolated || t_out};
}

ValueQuery ValueFunction::value_at(const Eigen::VectorXd& r, double t) const {
  return value_at(std::span<const double>(r.data(), r.size()), t);
}

Eigen::VectorXd ValueFunction::Gradient(const Eigen::VectorXd& r, double t) const {
  Eigen::VectorXd g(grid.dims());
  Eigen::VectorXd x = r;
  for (int i = 0; i < grid.dims(); ++i) {
    const double h = grid.spacing(i);
    x[i] = r[i] + h;
    const double up = value_at(x, t).value;
    x[i] = r[i] - h;
    const double down = value_at(x, t).value;
    x[i] = r[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

void ValueFunction::Validate() const {
  if (times.empty()) throw FormatError("ValueFunction: no slices");
  if (slices.size() != times.size()) throw FormatError("ValueFunction: slice/time count mismatch");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw FormatError("ValueFunction: timestamps not ascending");
  }
  for (const auto& s : slices) {
    if (s.size() != grid.size()) throw FormatError("ValueFunction: slice size mismatch");
  }
}

void SaveValueFunction(const ValueFunction& vf, const std::filesystem::path& path) {
  vf.Validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  Put<std::uint32_t>(out, kVersion);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(vf.grid.dims()));
  for (const Axis& a : vf.grid.axes()) {
    Put<double>(out, a.min);
    Put<double>(out, a.max);
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(a.count));
  }
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(vf.times.size()));
  for (double t : vf.times) Put<double>(out, t);
  for (const auto& s : vf.slices)
    out.write(reinterpret_cast<const char*>(s.data()),
              static_cast<std::streamsize>(s.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ValueFunction LoadValueFunction(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("WTVF: bad magic");
  if (Get<std::uint32_t>(in) != kVersion) throw FormatError("WTVF: unsupported version");
  const auto dims = Get<std::uint32_t>(in);
  if (dims == 0 || dims > 8) throw FormatError("WTVF: bad axis count");
  std::vector<Axis> axes(dims);
  for (auto& a : axes) {
    a.min = Get<double>(in);
    a.max = Get<double>(in);
    a.count = static_cast<int>(Get<std::uint32_t>(in));
  }
  ValueFunction vf;
  try {
    vf.grid = Grid(axes);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("WTVF: ") + e.what());
  }
  const auto nt = Get<std::uint32_t>(in);
  if (nt == 0) throw FormatError("WTVF: no timestamps");
  vf.times.resize(nt);
  for (auto& t : vf.times) t = Get<double>(in);
  vf.slices.assign(nt, std::vector<float>(vf.grid.size()));
  for (auto& s : vf.slices) {
    in.read(reinterpret_cast<char*>(s.data()),
            static_cast<std::streamsize>(s.size() * sizeof(float)));
    if (!in) throw FormatError("WTVF: truncated slice data");
  }
  in.peek();
  if (!in.eof()) throw FormatError("WTVF: trailing bytes");
  vf.Validate();
  for (const auto& s : vf.slices) {
    for (float v : s) {
      if (!std::isfinite(v)) throw FormatError("WTVF: non-finite value");
    }
  }
  vf.l_field = vf.slices.back();
  return vf;
}

double error_l(const Eigen::MatrixXd& C, const Eigen::VectorXd& r) { return (C * r).norm(); }

}  // namespace wavetrack
