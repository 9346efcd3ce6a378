#include "driftcast/metrics.hpp"

#include "driftcast/error.hpp"

#include <cmath>

namespace driftcast {

namespace {

void check_pair(std::span<const double> y, std::span<const double> y_hat, std::size_t min_len) {
	if (y.size() != y_hat.size()) {
		throw Error(Errc::LengthMismatch,
		            "lengths differ: " + std::to_string(y.size()) + " vs " + std::to_string(y_hat.size()));
	}
	if (y.size() < min_len) {
		throw Error(Errc::Empty, "need at least " + std::to_string(min_len) + " pairs");
	}
}

} // namespace

double mae(std::span<const double> y, std::span<const double> y_hat) {
	check_pair(y, y_hat, 1);
	double sum = 0.0;
	for (std::size_t i = 0; i < y.size(); ++i) {
		sum += std::abs(y[i] - y_hat[i]);
	}
	return sum / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
	check_pair(y, y_hat, 1);
	double sum = 0.0;
	for (std::size_t i = 0; i < y.size(); ++i) {
		const double e = y[i] - y_hat[i];
		sum += e * e;
	}
	return std::sqrt(sum / static_cast<double>(y.size()));
}

double r2(std::span<const double> y, std::span<const double> y_hat) {
	check_pair(y, y_hat, 2);
	double mean = 0.0;
	for (double v : y) {
		mean += v;
	}
	mean /= static_cast<double>(y.size());
	double sse = 0.0, sst = 0.0;
	for (std::size_t i = 0; i < y.size(); ++i) {
		sse += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
		sst += (y[i] - mean) * (y[i] - mean);
	}
	if (sst == 0.0) {
		throw Error(Errc::ZeroVariance, "r2 is undefined for a constant target");
	}
	return 1.0 - sse / sst;
}

EvalReport evaluate(std::span<const double> y, std::span<const double> y_hat, MetricScale scale,
                    Provenance provenance) {
	EvalReport r;
	r.mae = mae(y, y_hat);
	r.rmse = rmse(y, y_hat);
	r.r2 = r2(y, y_hat);
	r.n = y.size();
	r.scale = scale;
	r.provenance = std::move(provenance);
	return r;
}

nlohmann::json to_json(const EvalReport& report) {
	return {{"mae", report.mae},
	        {"rmse", report.rmse},
	        {"r2", report.r2},
	        {"n", report.n},
	        {"scale", report.scale == MetricScale::Standardized ? "standardized" : "original"},
	        {"provenance",
	         {{"dataset", report.provenance.dataset},
	          {"model", report.provenance.model},
	          {"strategy", report.provenance.strategy},
	          {"seed", report.provenance.seed}}}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
	EvalReport r;
	r.mae = j.at("mae").get<double>();
	r.rmse = j.at("rmse").get<double>();
	r.r2 = j.at("r2").get<double>();
	r.n = j.at("n").get<std::size_t>();
	r.scale = j.at("scale").get<std::string>() == "original" ? MetricScale::Original : MetricScale::Standardized;
	const auto& p = j.at("provenance");
	r.provenance = {p.at("dataset").get<std::string>(), p.at("model").get<std::string>(),
	                p.at("strategy").get<std::string>(), p.at("seed").get<std::uint64_t>()};
	return r;
}

} // namespace driftcast
