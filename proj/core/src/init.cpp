#include <cmath>

#include "localprop/errors.hpp"
#include "localprop/init.hpp"

namespace localprop {
namespace {

std::mt19937_64 engine_for(std::uint64_t seed, std::uint32_t role, std::uint32_t layer) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), role, layer};
  return std::mt19937_64(seq);
}

}  // namespace

void InitScheme::validate() const {
  if (kind == Kind::Gaussian && !(variance > 0.0)) throw ConfigError("init variance must be positive");
}

std::string InitScheme::name() const {
  switch (kind) {
    case Kind::Gaussian:
      return "gaussian";
    case Kind::FanInFanOut:
      return "fan_in_fan_out";
    case Kind::Orthogonal:
      return "orthogonal";
  }
  return "unknown";
}

InitScheme InitScheme::parse(const std::string& text) {
  if (text == "gaussian" || text == "g") return gaussian();
  if (text == "fan_in_fan_out" || text == "glorot" || text == "gloro") return fan_in_fan_out();
  if (text == "orthogonal" || text == "ortho") return orthogonal();
  throw ConfigError("unknown init scheme '" + text + "'");
}

double fan_in_fan_out_bound(int rows, int cols) { return std::sqrt(6.0 / static_cast<double>(rows + cols)); }

Matrix draw_matrix(int rows, int cols, const InitScheme& scheme, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  switch (scheme.kind) {
    case InitScheme::Kind::Gaussian: {
      std::normal_distribution<double> dist(0.0, std::sqrt(scheme.variance));
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
      return m;
    }
    case InitScheme::Kind::FanInFanOut: {
      const double bound = fan_in_fan_out_bound(rows, cols);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
      return m;
    }
    case InitScheme::Kind::Orthogonal: {
      // Factor the tall orientation so Q has orthonormal columns.
      const bool tall = rows >= cols;
      const int n_rows = tall ? rows : cols;
      const int n_cols = tall ? cols : rows;
      std::normal_distribution<double> dist(0.0, 1.0);
      Matrix g(n_rows, n_cols);
      for (Eigen::Index c = 0; c < g.cols(); ++c)
        for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = dist(rng);
      Eigen::HouseholderQR<Matrix> qr(g);
      Matrix q = qr.householderQ() * Matrix::Identity(n_rows, n_cols);
      const Matrix r = qr.matrixQR().topRows(n_cols).triangularView<Eigen::Upper>();
      for (int j = 0; j < n_cols; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
      }
      return tall ? q : Matrix(q.transpose());
    }
  }
  return m;
}

NetworkParams init_params(std::span<const LayerSpec> specs, const InitScheme& scheme, std::uint64_t seed,
                          FeedbackLayout layout) {
  validate_specs(specs);
  scheme.validate();
  constexpr std::uint32_t kForwardRole = 1;
  constexpr std::uint32_t kFeedbackRole = 2;

  NetworkParams params;
  params.layout = layout;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto rng = engine_for(seed, kForwardRole, static_cast<std::uint32_t>(i));
    Layer layer;
    layer.weights = draw_matrix(specs[i].output_dim, specs[i].input_dim, scheme, rng);
    layer.bias = Vector::Zero(specs[i].output_dim);
    layer.activation = specs[i].activation;
    params.layers.push_back(std::move(layer));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto [rows, cols] = feedback_shape(specs, layout, static_cast<int>(i));
    if (rows == 0) {
      params.feedback.emplace_back();
      continue;
    }
    auto rng = engine_for(seed, kFeedbackRole, static_cast<std::uint32_t>(i));
    params.feedback.push_back(draw_matrix(rows, cols, scheme, rng));
  }
  return params;
}

}  // namespace localprop
