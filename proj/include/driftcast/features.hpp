#pragma once

#include "driftcast/frame.hpp"

#include <string>
#include <utility>
#include <vector>

namespace driftcast {

struct FeatureSpec {
	std::vector<std::size_t> lags{1, 24, 168};
	std::vector<std::size_t> rolling_windows{24, 168};
	bool hour_of_day = true;
	bool day_of_week = true;
	int polynomial_degree = 1;

	/// Rows consumed before every lag and window is defined.
	std::size_t warmup() const noexcept;
	void validate() const;
};

/// Calendar encodings plus rolling means only, no lags.
FeatureSpec reduced_feature_spec(const FeatureSpec& base);
/// Adds short lags, a two-day lag and a six-hour window to `base`.
FeatureSpec enriched_feature_spec(const FeatureSpec& base);

/// Design matrix aligned with a target. Row i comes from source row origin_index + i.
struct FeatureMatrix {
	Matrix x;
	Vector y;
	std::vector<std::string> feature_names;
	std::vector<Timestamp> timestamps;
	std::size_t origin_index = 0;
	std::string target;

	std::size_t rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
	std::size_t cols() const noexcept { return static_cast<std::size_t>(x.cols()); }

	/// Rows [begin, end); origin_index moves with the slice.
	FeatureMatrix slice_rows(std::size_t begin, std::size_t end) const;
	/// Features plus the target as a frame, for detection and export.
	TimeSeriesFrame to_frame() const;
	std::string to_csv() const;
};

/// hour_sin, hour_cos, dow_sin, dow_cos (Monday = 0).
std::vector<Column> cyclic_encode(std::span<const Timestamp> timestamps);

/// lag_k[t] = values[t - k]; missing for t < k.
std::vector<Column> make_lags(std::span<const double> values, std::span<const std::size_t> lags);

/// Trailing window over values[t - window .. t - 1]; the current row is excluded.
/// Returns (roll_mean_w, roll_std_w) with population std.
std::pair<Column, Column> rolling_stats(std::span<const double> values, std::size_t window);

/// Degree 1 returns the input. Degree 2 appends squares (`a^2`) then pairwise
/// products (`a*b`, pairs in index order).
std::pair<Matrix, std::vector<std::string>> polynomial_expand(const Matrix& x, const std::vector<std::string>& names,
                                                              int degree);

FeatureMatrix build_features(const TimeSeriesFrame& frame, const std::string& target, const FeatureSpec& spec);

} // namespace driftcast
