#pragma once

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>

namespace driftcast {

double mae(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);
/// 1 - SSE/SST. Negative values are legitimate; constant y throws ZeroVariance.
double r2(std::span<const double> y, std::span<const double> y_hat);

enum class MetricScale { Standardized, Original };

struct Provenance {
	std::string dataset;
	std::string model;
	std::string strategy;
	std::uint64_t seed = 0;
};

struct EvalReport {
	double mae = 0.0;
	double rmse = 0.0;
	double r2 = 0.0;
	std::size_t n = 0;
	MetricScale scale = MetricScale::Standardized;
	Provenance provenance;

	/// Metric fields only; provenance is ignored.
	bool same_metrics(const EvalReport& other) const noexcept {
		return mae == other.mae && rmse == other.rmse && r2 == other.r2 && n == other.n && scale == other.scale;
	}
};

EvalReport evaluate(std::span<const double> y, std::span<const double> y_hat, MetricScale scale,
                    Provenance provenance);

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

} // namespace driftcast
