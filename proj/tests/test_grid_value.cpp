#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "wavetrack/grid.hpp"
#include "wavetrack/value_function.hpp"

using namespace wavetrack;
using Catch::Approx;

namespace {

std::filesystem::path TempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("wavetrack_test_" + name);
}

// V(r, t) = (1 + t) * (r0 + 2 r1) on a 2-D grid: multilinear in space and linear in time.
ValueFunction AffineValue() {
  ValueFunction V;
  V.grid = Grid({{-1.0, 1.0, 5}, {0.0, 2.0, 3}});
  V.times = {0.0, 0.5, 1.0};
  for (double t : V.times) {
    std::vector<float> s(V.grid.size());
    for (std::size_t n = 0; n < V.grid.size(); ++n) {
      const Eigen::VectorXd x = V.grid.Node(n);
      s[n] = static_cast<float>((1.0 + t) * (x[0] + 2.0 * x[1]));
    }
    V.slices.push_back(s);
  }
  V.l_field = V.slices.back();
  return V;
}

}  // namespace

TEST_CASE("grid indexing round trip", "[grid]") {
  const Grid g({{0.0, 1.0, 3}, {-1.0, 1.0, 5}, {2.0, 4.0, 3}});
  CHECK(g.size() == 45);
  CHECK(g.stride(2) == 1);
  CHECK(g.stride(0) == 15);
  for (std::size_t n = 0; n < g.size(); ++n) {
    int idx[3];
    g.Unravel(n, idx);
    CHECK(g.Index(idx) == n);
  }
  CHECK(g.max_spacing() == Approx(1.0));
  const Eigen::VectorXd node = g.Node(g.Index(std::array<int, 3>{2, 1, 1}));
  CHECK(node.isApprox(Eigen::Vector3d(1.0, -0.5, 3.0)));
  CHECK_THROWS(Grid({{0.0, 1.0, 2}}));
}

TEST_CASE("value queries on nodes, midpoints and between slices", "[value]") {
  const ValueFunction V = AffineValue();
  // On-node query returns the stored value.
  const double node[2] = {0.5, 1.0};
  CHECK(V.value_at(std::span<const double>(node, 2), 0.5).value == V.slices[1][3 * 3 + 1]);
  // Midpoint of two nodes in one axis is their mean.
  const double mid[2] = {0.25, 1.0};
  const double a = V.slices[0][2 * 3 + 1], b = V.slices[0][3 * 3 + 1];
  CHECK(V.value_at(std::span<const double>(mid, 2), 0.0).value == Approx(0.5 * (a + b)));
  // Time blend between slices.
  const double p[2] = {0.3, 0.7};
  const double at_t = V.value_at(std::span<const double>(p, 2), 0.25).value;
  CHECK(at_t == Approx(1.25 * (0.3 + 1.4)).epsilon(1e-6));
  CHECK_FALSE(V.value_at(std::span<const double>(p, 2), 0.25).extrapolated);
  const double out[2] = {1.5, 0.0};
  CHECK(V.value_at(std::span<const double>(out, 2), 0.0).extrapolated);
}

TEST_CASE("gradient of an affine field", "[value]") {
  const ValueFunction V = AffineValue();
  // Central differences one spacing away stay inside the grid.
  const Eigen::VectorXd g = V.Gradient(Eigen::Vector2d(0.1, 1.0), 1.0);
  CHECK(g[0] == Approx(2.0).epsilon(1e-6));
  CHECK(g[1] == Approx(4.0).epsilon(1e-6));
}

TEST_CASE("value file round trip is bitwise", "[value][io]") {
  const ValueFunction V = AffineValue();
  const auto path = TempPath("roundtrip.wtvf");
  SaveValueFunction(V, path);
  const ValueFunction W = LoadValueFunction(path);
  CHECK(W.grid == V.grid);
  CHECK(W.times == V.times);
  CHECK(W.slices == V.slices);
  CHECK(W.l_field == V.l_field);
  std::filesystem::remove(path);
}

TEST_CASE("corrupted value files are rejected", "[value][io]") {
  const ValueFunction V = AffineValue();
  const auto path = TempPath("corrupt.wtvf");
  SaveValueFunction(V, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(LoadValueFunction(path), FormatError);

  SaveValueFunction(V, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  CHECK_THROWS_AS(LoadValueFunction(path), FormatError);

  SaveValueFunction(V, path);
  {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    f.put('x');
  }
  CHECK_THROWS_AS(LoadValueFunction(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("error norm", "[value]") {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, 4);
  C(0, 0) = 1.0;
  C(1, 1) = 1.0;
  Eigen::VectorXd r(4);
  r << 3.0, 4.0, 7.0, -2.0;
  CHECK(error_l(C, r) == 5.0);
  CHECK(error_l(C, Eigen::VectorXd::Zero(4)) == 0.0);
  CHECK(error_l(C, 2.0 * r) == 10.0);
}
