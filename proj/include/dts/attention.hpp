#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dts::attention {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  static Matrix identity(std::size_t n);
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// One (caption, region) pair seen from the attention layer: which query
/// positions lie in the region and which key tokens spell the caption.
struct SegmentSpec {
  std::vector<std::uint8_t> query;
  std::vector<std::uint8_t> key;
  /// Region area in query units; defaults to the number of member queries.
  std::optional<double> area;

  double region_area() const;
};

struct ModulationParams {
  double strength = 1.0;  // w
  double t = 0.0;
  double T = 1.0;
};

/// Raw scores Q K^T (no scaling).
Matrix scores(const Matrix& queries, const Matrix& keys);

/// Row-wise softmax of logits * scale, max-subtracted.
Matrix softmax_rows(const Matrix& logits, double scale);

/// softmax(Q K^T / sqrt(d)).
Matrix base_attention(const Matrix& queries, const Matrix& keys);

/// R[i,j] = 1 iff query i and key j belong to the same segment. Throws
/// OverlapError when two segments claim the same key token.
Matrix build_condition_map(std::span<const SegmentSpec> segments, std::size_t nq, std::size_t nk);

/// S[i,j] = area of the segment owning query i, relative to the canvas; the
/// owning segment of a positive pair is the one that holds its key. Queries
/// outside all segments get 0.
Matrix build_size_map(std::span<const SegmentSpec> segments, double canvas_area, std::size_t nq, std::size_t nk);

struct RangeMaps {
  Matrix pos;  // row max - score
  Matrix neg;  // score - row min
};

RangeMaps build_range_maps(const Matrix& raw);

/// lambda_t = w * t / T.
double lambda_schedule(const ModulationParams& params);

/// Additive bias lambda*R*Mpos*(1-S) - lambda*(1-R)*Mneg*(1-S).
Matrix modulation_bias(const Matrix& raw, const Matrix& condition, const Matrix& size, double lambda);

/// Pre-softmax scores Q K^T + M. Rows of queries outside every segment are
/// not modulated.
Matrix modulated_scores(const Matrix& queries, const Matrix& keys, std::span<const SegmentSpec> segments,
                        const ModulationParams& params, double canvas_area);

/// softmax((Q K^T + M) / sqrt(d)).
Matrix modulate(const Matrix& queries, const Matrix& keys, std::span<const SegmentSpec> segments,
                const ModulationParams& params, double canvas_area);

}  // namespace dts::attention
