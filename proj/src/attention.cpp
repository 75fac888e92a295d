#include "dts/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dts/error.hpp"
#include "dts/simd.hpp"

namespace dts::attention {
namespace {

void check_segment(const SegmentSpec& s, std::size_t nq, std::size_t nk) {
  if (s.query.size() != nq || s.key.size() != nk) throw DimMismatch("segment masks do not match attention shape");
}

// Key token -> owning segment index, or -1.
std::vector<long> key_owners(std::span<const SegmentSpec> segments, std::size_t nq, std::size_t nk) {
  std::vector<long> owner(nk, -1);
  for (std::size_t n = 0; n < segments.size(); ++n) {
    check_segment(segments[n], nq, nk);
    for (std::size_t j = 0; j < nk; ++j) {
      if (!segments[n].key[j]) continue;
      if (owner[j] >= 0)
        throw OverlapError("key token " + std::to_string(j) + " claimed by segments " + std::to_string(owner[j]) +
                           " and " + std::to_string(n));
      owner[j] = static_cast<long>(n);
    }
  }
  return owner;
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double SegmentSpec::region_area() const {
  if (area) return *area;
  return static_cast<double>(std::count_if(query.begin(), query.end(), [](auto b) { return b != 0; }));
}

Matrix scores(const Matrix& queries, const Matrix& keys) {
  if (queries.cols != keys.cols || queries.cols == 0)
    throw DimMismatch("queries and keys must share a non-zero inner dimension");
  const auto& k = simd::active();
  Matrix raw(queries.rows, keys.rows);
  for (std::size_t i = 0; i < queries.rows; ++i)
    for (std::size_t j = 0; j < keys.rows; ++j) raw(i, j) = k.dot(queries.row(i), keys.row(j));
  return raw;
}

Matrix softmax_rows(const Matrix& logits, double scale) {
  Matrix out(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    auto in = logits.row(i);
    auto row = out.row(i);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end()) * scale;
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      row[j] = std::exp(in[j] * scale - mx);
      sum += row[j];
    }
    for (double& v : row) v /= sum;
  }
  return out;
}

Matrix base_attention(const Matrix& queries, const Matrix& keys) {
  return softmax_rows(scores(queries, keys), 1.0 / std::sqrt(static_cast<double>(queries.cols)));
}

Matrix build_condition_map(std::span<const SegmentSpec> segments, std::size_t nq, std::size_t nk) {
  const auto owner = key_owners(segments, nq, nk);
  Matrix r(nq, nk);
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t j = 0; j < nk; ++j)
      if (owner[j] >= 0 && segments[static_cast<std::size_t>(owner[j])].query[i]) r(i, j) = 1.0;
  return r;
}

Matrix build_size_map(std::span<const SegmentSpec> segments, double canvas_area, std::size_t nq, std::size_t nk) {
  if (!(canvas_area > 0.0)) throw Error("canvas area must be positive");
  const auto owner = key_owners(segments, nq, nk);
  std::vector<double> rel(segments.size());
  for (std::size_t n = 0; n < segments.size(); ++n) {
    const double a = segments[n].region_area();
    if (a < 0.0 || a > canvas_area) throw Error("segment area exceeds the canvas");
    rel[n] = a / canvas_area;
  }
  Matrix s(nq, nk);
  for (std::size_t i = 0; i < nq; ++i) {
    double row_size = 0.0;
    for (std::size_t n = 0; n < segments.size(); ++n)
      if (segments[n].query[i]) {
        row_size = rel[n];
        break;
      }
    for (std::size_t j = 0; j < nk; ++j) {
      const bool positive = owner[j] >= 0 && segments[static_cast<std::size_t>(owner[j])].query[i];
      s(i, j) = positive ? rel[static_cast<std::size_t>(owner[j])] : row_size;
    }
  }
  return s;
}

RangeMaps build_range_maps(const Matrix& raw) {
  RangeMaps m{Matrix(raw.rows, raw.cols), Matrix(raw.rows, raw.cols)};
  for (std::size_t i = 0; i < raw.rows; ++i) {
    auto row = raw.row(i);
    if (row.empty()) continue;
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    for (std::size_t j = 0; j < row.size(); ++j) {
      m.pos(i, j) = *hi - row[j];
      m.neg(i, j) = row[j] - *lo;
    }
  }
  return m;
}

double lambda_schedule(const ModulationParams& params) {
  if (params.strength < 0.0) throw Error("modulation strength must be non-negative");
  if (!(params.T > 0.0) || params.t < 0.0 || params.t > params.T) throw StepOutOfRange("modulation timestep outside [0, T]");
  return params.strength * (params.t / params.T);
}

Matrix modulation_bias(const Matrix& raw, const Matrix& condition, const Matrix& size, double lambda) {
  const RangeMaps range = build_range_maps(raw);
  Matrix m(raw.rows, raw.cols);
  for (std::size_t k = 0; k < m.data.size(); ++k) {
    const double keep = 1.0 - size.data[k];
    m.data[k] = lambda * condition.data[k] * range.pos.data[k] * keep -
                lambda * (1.0 - condition.data[k]) * range.neg.data[k] * keep;
  }
  return m;
}

Matrix modulated_scores(const Matrix& queries, const Matrix& keys, std::span<const SegmentSpec> segments,
                        const ModulationParams& params, double canvas_area) {
  Matrix raw = scores(queries, keys);
  const double lambda = lambda_schedule(params);
  const Matrix r = build_condition_map(segments, raw.rows, raw.cols);
  const Matrix s = build_size_map(segments, canvas_area, raw.rows, raw.cols);
  const Matrix m = modulation_bias(raw, r, s, lambda);
  // Queries outside every segment have no positive keys; their rows stay as they are.
  for (std::size_t i = 0; i < raw.rows; ++i) {
    const bool member = std::any_of(segments.begin(), segments.end(), [&](const SegmentSpec& seg) { return seg.query[i] != 0; });
    if (!member) continue;
    for (std::size_t j = 0; j < raw.cols; ++j) raw(i, j) += m(i, j);
  }
  return raw;
}

Matrix modulate(const Matrix& queries, const Matrix& keys, std::span<const SegmentSpec> segments,
                const ModulationParams& params, double canvas_area) {
  return softmax_rows(modulated_scores(queries, keys, segments, params, canvas_area),
                      1.0 / std::sqrt(static_cast<double>(queries.cols)));
}

}  // namespace dts::attention
