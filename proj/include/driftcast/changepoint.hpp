#pragma once

#include "driftcast/frame.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace driftcast {

enum class CostKind {
	L2Mean,      // sum of squared deviations from the segment mean
	GaussianNLL, // (len/2) ln(max(var, floor)), mean and variance both free
};

std::string cost_kind_name(CostKind kind);
CostKind parse_cost_kind(std::string_view name);

struct CostModel {
	CostKind kind = CostKind::L2Mean;
	double variance_floor = 1e-8;

	/// Shortest segment the model can score.
	std::size_t min_points() const noexcept { return kind == CostKind::GaussianNLL ? 2 : 1; }
};

/// Linear penalty beta * m on the number of changepoints m.
struct PenaltyConfig {
	double beta = 0.0;
};

/// Changepoints are the starts of segments 2..m+1 in half-open index terms:
/// segment i covers [tau_{i-1}, tau_i) with tau_0 = 0 and tau_{m+1} = n.
struct Segmentation {
	std::size_t n = 0;
	std::vector<std::size_t> changepoints;
	double total_cost = 0.0;
	double beta = 0.0;
	CostKind cost_model = CostKind::L2Mean;
};

/// O(1) segment costs over one or more aligned columns after an O(n) prefix
/// pass. With several columns the cost is the sum of per-column costs.
class SegmentCost {
public:
	SegmentCost(std::span<const double> values, CostModel model);
	SegmentCost(const std::vector<std::span<const double>>& columns, CostModel model);

	std::size_t size() const noexcept { return n_; }
	const CostModel& model() const noexcept { return model_; }

	/// Cost of rows [begin, end). Caller guarantees end - begin >= model().min_points().
	double operator()(std::size_t begin, std::size_t end) const noexcept;

private:
	CostModel model_;
	std::size_t n_ = 0;
	// per column, n + 1 entries each, values centred on the column mean
	std::vector<std::vector<double>> sum_;
	std::vector<std::vector<double>> sum_sq_;
};

/// Cost of the inclusive index range [t1, t2].
double segment_cost(std::span<const double> values, std::size_t t1, std::size_t t2, const CostModel& model);

/// Optional instrumentation for verifying pruning against the exhaustive DP.
struct DetectTrace {
	/// (candidate, time at which it was pruned)
	std::vector<std::pair<std::size_t, std::size_t>> pruned;
	/// back_pointer[t] = start of the final segment in the optimum for prefix t
	std::vector<std::size_t> back_pointer;
	/// Total candidate evaluations performed.
	std::size_t evaluations = 0;
};

Segmentation pelt_detect(const SegmentCost& cost, const PenaltyConfig& penalty, std::size_t min_size = 2,
                         DetectTrace* trace = nullptr);
Segmentation pelt_detect(std::span<const double> values, const CostModel& model, const PenaltyConfig& penalty,
                         std::size_t min_size = 2, DetectTrace* trace = nullptr);

/// Unpruned optimal partitioning, quadratic in n. Used as the oracle for pelt_detect.
Segmentation op_detect(const SegmentCost& cost, const PenaltyConfig& penalty, std::size_t min_size = 2,
                       DetectTrace* trace = nullptr);
Segmentation op_detect(std::span<const double> values, const CostModel& model, const PenaltyConfig& penalty,
                       std::size_t min_size = 2, DetectTrace* trace = nullptr);

/// beta = 2 * s2 * ln n with s2 = mean((y[t+1] - y[t])^2) / 2, floored at 1e-12.
PenaltyConfig default_penalty(std::span<const double> values);

/// Joint segmentation of the listed columns under the summed cost. Columns are
/// expected to be standardized already. Only the listed columns are read.
Segmentation multivariate_detect(const TimeSeriesFrame& frame, const std::vector<std::string>& columns,
                                 const CostModel& model, const PenaltyConfig& penalty, std::size_t min_size = 2);

std::optional<std::size_t> last_changepoint(const Segmentation& seg) noexcept;

nlohmann::json to_json(const Segmentation& seg);
Segmentation segmentation_from_json(const nlohmann::json& j);

} // namespace driftcast
