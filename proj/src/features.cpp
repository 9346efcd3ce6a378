#include "driftcast/features.hpp"

#include "driftcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace driftcast {

std::size_t FeatureSpec::warmup() const noexcept {
	std::size_t w = 0;
	for (auto k : lags) {
		w = std::max(w, k);
	}
	for (auto k : rolling_windows) {
		w = std::max(w, k);
	}
	return w;
}

void FeatureSpec::validate() const {
	for (auto k : lags) {
		if (k == 0) {
			throw Error(Errc::InvalidArgument, "lag 0 is not a lag");
		}
	}
	for (auto w : rolling_windows) {
		if (w < 2) {
			throw Error(Errc::WindowTooSmall, "rolling window must be at least 2");
		}
	}
	if (polynomial_degree != 1 && polynomial_degree != 2) {
		throw Error(Errc::UnsupportedDegree, "polynomial degree must be 1 or 2");
	}
}

FeatureSpec reduced_feature_spec(const FeatureSpec& base) {
	FeatureSpec spec = base;
	spec.lags.clear();
	return spec;
}

FeatureSpec enriched_feature_spec(const FeatureSpec& base) {
	FeatureSpec spec = base;
	for (std::size_t k : {std::size_t{2}, std::size_t{3}, std::size_t{48}}) {
		if (std::find(spec.lags.begin(), spec.lags.end(), k) == spec.lags.end()) {
			spec.lags.push_back(k);
		}
	}
	std::sort(spec.lags.begin(), spec.lags.end());
	if (std::find(spec.rolling_windows.begin(), spec.rolling_windows.end(), 6) == spec.rolling_windows.end()) {
		spec.rolling_windows.insert(spec.rolling_windows.begin(), 6);
	}
	return spec;
}

FeatureMatrix FeatureMatrix::slice_rows(std::size_t begin, std::size_t end) const {
	if (begin > end || end > rows()) {
		throw Error(Errc::InvalidArgument, "feature slice out of range");
	}
	const auto b = static_cast<Eigen::Index>(begin);
	const auto len = static_cast<Eigen::Index>(end - begin);
	FeatureMatrix out;
	out.x = x.middleRows(b, len);
	out.y = y.segment(b, len);
	out.feature_names = feature_names;
	out.timestamps.assign(timestamps.begin() + b, timestamps.begin() + b + len);
	out.origin_index = origin_index + begin;
	out.target = target;
	return out;
}

TimeSeriesFrame FeatureMatrix::to_frame() const {
	std::vector<Column> out;
	out.reserve(cols() + 1);
	for (std::size_t j = 0; j < cols(); ++j) {
		std::vector<double> v(rows());
		for (std::size_t i = 0; i < rows(); ++i) {
			v[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
		}
		out.push_back({feature_names[j], std::move(v)});
	}
	if (!target.empty() && std::find(feature_names.begin(), feature_names.end(), target) == feature_names.end()) {
		out.push_back({target, std::vector<double>(y.data(), y.data() + y.size())});
	}
	return TimeSeriesFrame(timestamps, std::move(out));
}

std::string FeatureMatrix::to_csv() const { return driftcast::to_csv(to_frame()); }

std::vector<Column> cyclic_encode(std::span<const Timestamp> timestamps) {
	constexpr double two_pi = 2.0 * std::numbers::pi;
	std::vector<Column> cols{{"hour_sin", {}}, {"hour_cos", {}}, {"dow_sin", {}}, {"dow_cos", {}}};
	for (auto& c : cols) {
		c.values.reserve(timestamps.size());
	}
	for (const auto ts : timestamps) {
		const double h = two_pi * hour_of_day(ts) / 24.0;
		const double d = two_pi * day_of_week(ts) / 7.0;
		cols[0].values.push_back(std::sin(h));
		cols[1].values.push_back(std::cos(h));
		cols[2].values.push_back(std::sin(d));
		cols[3].values.push_back(std::cos(d));
	}
	return cols;
}

std::vector<Column> make_lags(std::span<const double> values, std::span<const std::size_t> lags) {
	std::vector<Column> cols;
	for (const auto k : lags) {
		if (k == 0) {
			throw Error(Errc::InvalidArgument, "lag 0 is not a lag");
		}
		if (k >= values.size()) {
			throw Error(Errc::LagExceedsLength,
			            "lag " + std::to_string(k) + " needs more than " + std::to_string(values.size()) + " rows");
		}
		std::vector<double> v(values.size(), kMissing);
		std::copy(values.begin(), values.end() - static_cast<std::ptrdiff_t>(k), v.begin() + static_cast<std::ptrdiff_t>(k));
		cols.push_back({"lag_" + std::to_string(k), std::move(v)});
	}
	return cols;
}

std::pair<Column, Column> rolling_stats(std::span<const double> values, std::size_t window) {
	if (window < 2) {
		throw Error(Errc::WindowTooSmall, "rolling window must be at least 2");
	}
	if (window >= values.size()) {
		throw Error(Errc::LagExceedsLength, "window " + std::to_string(window) + " needs more than " +
		                                        std::to_string(values.size()) + " rows");
	}
	const std::size_t n = values.size();
	Column mean{"roll_mean_" + std::to_string(window), std::vector<double>(n, kMissing)};
	Column sd{"roll_std_" + std::to_string(window), std::vector<double>(n, kMissing)};
	// Shifted sums keep the variance well conditioned; constant input stays exactly zero.
	const double shift = values.front();
	const double w = static_cast<double>(window);
	double s = 0.0, s2 = 0.0;
	for (std::size_t t = 0; t < n; ++t) {
		if (t >= window) {
			const double m = s / w;
			mean.values[t] = m + shift;
			sd.values[t] = std::sqrt(std::max(0.0, s2 / w - m * m));
			const double old = values[t - window] - shift;
			s -= old;
			s2 -= old * old;
		}
		const double x = values[t] - shift;
		s += x;
		s2 += x * x;
	}
	return {std::move(mean), std::move(sd)};
}

std::pair<Matrix, std::vector<std::string>> polynomial_expand(const Matrix& x, const std::vector<std::string>& names,
                                                              int degree) {
	if (degree != 1 && degree != 2) {
		throw Error(Errc::UnsupportedDegree, "polynomial degree must be 1 or 2, got " + std::to_string(degree));
	}
	if (names.size() != static_cast<std::size_t>(x.cols())) {
		throw Error(Errc::ShapeMismatch, "feature names do not match matrix columns");
	}
	if (degree == 1) {
		return {x, names};
	}
	const Eigen::Index k = x.cols();
	Matrix out(x.rows(), k + k + k * (k - 1) / 2);
	std::vector<std::string> out_names = names;
	out.leftCols(k) = x;
	Eigen::Index c = k;
	for (Eigen::Index j = 0; j < k; ++j, ++c) {
		out.col(c) = x.col(j).array().square();
		out_names.push_back(names[static_cast<std::size_t>(j)] + "^2");
	}
	for (Eigen::Index a = 0; a < k; ++a) {
		for (Eigen::Index b = a + 1; b < k; ++b, ++c) {
			out.col(c) = x.col(a).array() * x.col(b).array();
			out_names.push_back(names[static_cast<std::size_t>(a)] + "*" + names[static_cast<std::size_t>(b)]);
		}
	}
	return {std::move(out), std::move(out_names)};
}

FeatureMatrix build_features(const TimeSeriesFrame& frame, const std::string& target, const FeatureSpec& spec) {
	spec.validate();
	const auto values = frame.column(target);
	for (std::size_t i = 0; i < values.size(); ++i) {
		if (is_missing(values[i])) {
			throw Error(Errc::InvalidArgument, "target '" + target + "' has a gap at row " + std::to_string(i) +
			                                       "; forward-fill first");
		}
	}
	const std::size_t n = frame.rows();
	const std::size_t warmup = spec.warmup();
	if (warmup >= n) {
		throw Error(Errc::LagExceedsLength, "warmup of " + std::to_string(warmup) + " rows leaves no data out of " +
		                                        std::to_string(n));
	}

	std::vector<Column> cols;
	if (spec.hour_of_day || spec.day_of_week) {
		auto cyc = cyclic_encode(frame.timestamps());
		if (spec.hour_of_day) {
			cols.push_back(std::move(cyc[0]));
			cols.push_back(std::move(cyc[1]));
		}
		if (spec.day_of_week) {
			cols.push_back(std::move(cyc[2]));
			cols.push_back(std::move(cyc[3]));
		}
	}
	for (auto& c : make_lags(values, spec.lags)) {
		cols.push_back(std::move(c));
	}
	for (const auto w : spec.rolling_windows) {
		auto [m, s] = rolling_stats(values, w);
		cols.push_back(std::move(m));
		cols.push_back(std::move(s));
	}

	const std::size_t rows = n - warmup;
	Matrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols.size()));
	std::vector<std::string> names;
	for (std::size_t j = 0; j < cols.size(); ++j) {
		names.push_back(cols[j].name);
		for (std::size_t i = 0; i < rows; ++i) {
			x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j].values[warmup + i];
		}
	}

	FeatureMatrix fm;
	std::tie(fm.x, fm.feature_names) = polynomial_expand(x, names, spec.polynomial_degree);
	fm.y = Vector(static_cast<Eigen::Index>(rows));
	for (std::size_t i = 0; i < rows; ++i) {
		fm.y(static_cast<Eigen::Index>(i)) = values[warmup + i];
	}
	fm.timestamps.assign(frame.timestamps().begin() + static_cast<std::ptrdiff_t>(warmup), frame.timestamps().end());
	fm.origin_index = warmup;
	fm.target = target;
	return fm;
}

} // namespace driftcast
