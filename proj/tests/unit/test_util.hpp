#pragma once

#include "driftcast/error.hpp"
#include "driftcast/frame.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace driftcast::testing {

inline std::vector<Timestamp> hourly(std::size_t n, Timestamp start = make_timestamp(2020, 1, 1)) {
	std::vector<Timestamp> ts(n);
	for (std::size_t i = 0; i < n; ++i) {
		ts[i] = start + static_cast<Timestamp>(i) * kSecondsPerHour;
	}
	return ts;
}

inline TimeSeriesFrame hourly_frame(std::vector<double> values, std::string name = "y") {
	const auto n = values.size();
	return TimeSeriesFrame(hourly(n), {{std::move(name), std::move(values)}});
}

inline std::vector<double> gaussian(std::size_t n, std::mt19937_64& rng, double mean = 0.0, double sd = 1.0) {
	std::normal_distribution<double> d(mean, sd);
	std::vector<double> v(n);
	for (auto& x : v) {
		x = d(rng);
	}
	return v;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

/// Code of the Error thrown by fn; records a failure when nothing is thrown.
inline Errc errc_of(const std::function<void()>& fn) {
	try {
		fn();
	} catch (const Error& e) {
		return e.code();
	}
	ADD_FAILURE() << "expected an Error";
	return Errc::InvalidArgument;
}

} // namespace driftcast::testing
