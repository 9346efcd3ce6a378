#pragma once

#include "driftcast/changepoint.hpp"
#include "driftcast/features.hpp"
#include "driftcast/frame.hpp"
#include "driftcast/lasso.hpp"
#include "driftcast/metrics.hpp"
#include "driftcast/mlp.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace driftcast {

enum class Strategy { Baseline, DriftRetrain };
enum class ModelKind { Mlp, Lasso };
enum class DetectOn { Features, Target };

enum class PenaltyPolicy {
	/// 2 * d * ln n on d standardized columns (unit-variance BIC).
	StandardizedBic,
	/// Sum of default_penalty over the detection columns.
	Auto,
	Fixed,
};

std::string strategy_name(Strategy s);
std::string model_name(ModelKind m);

struct DetectionConfig {
	DetectOn on = DetectOn::Features;
	/// Empty selects every feature column.
	std::vector<std::string> columns;
	CostModel cost;
	PenaltyPolicy penalty = PenaltyPolicy::StandardizedBic;
	double beta = 0.0; // PenaltyPolicy::Fixed only
	std::size_t min_size = 2;
	/// Detection reads every stride-th training row. 168 keeps the daily and
	/// weekly phase fixed, so seasonality and overlapping rolling windows do not
	/// register as drift. 1 reads every row.
	std::size_t stride = 168;
	/// Post-drift segments shorter than this fall back to baseline training.
	std::size_t min_retrain_rows = 168;
};

struct StrategyConfig {
	Strategy strategy = Strategy::Baseline;
	ModelKind model = ModelKind::Lasso;
	MlpConfig mlp;
	LassoConfig lasso;
	FeatureSpec features;
	/// Baseline on calendar + rolling features only, retrain on an enriched set.
	bool enriched = false;
	DetectionConfig detection; // ignored for Baseline
	SplitSpec split;
	std::uint64_t seed = 42;
	MetricScale scale = MetricScale::Standardized;
	std::string dataset_id = "dataset";
};

/// Which source rows each stage consumed. Row bounds are half-open frame indices.
struct PipelineAudit {
	std::size_t rows = 0;
	std::size_t train_boundary = 0;
	std::size_t detection_begin = 0;
	std::size_t detection_end = 0;
	std::size_t scaler_end = 0;
	std::size_t model_fit_end = 0;
	std::vector<std::string> detection_columns;
};

struct RunReport {
	EvalReport eval;
	std::optional<Segmentation> segmentation;
	/// Segmentation indices count detection rows; these map them to frame rows.
	std::size_t detection_stride = 1;
	std::vector<std::size_t> changepoint_rows;
	/// Frame row of the last changepoint, when one was found.
	std::optional<std::size_t> changepoint_row;
	std::size_t training_rows_used = 0;
	std::size_t full_training_rows = 0;
	/// First frame row the model was fit on.
	std::size_t fit_start_row = 0;
	bool fallback = false;
	std::string note;
	std::optional<TrainReport> train_report;
	std::vector<CvRecord> cv;
	nlohmann::json model;
	StrategyConfig config;
	std::string dataset_sha256;
	std::string test_sha256;
	std::vector<Timestamp> test_timestamps;
	std::vector<double> test_actual;    // original units
	std::vector<double> test_predicted; // original units
	PipelineAudit audit;
};

/// Trains once on every training row, evaluates on the chronological test block.
RunReport run_baseline(const TimeSeriesFrame& frame, const std::string& target, const StrategyConfig& config);

/// Detects changepoints on the training block only, discards everything before
/// the last one and retrains from scratch; evaluates on the baseline's test block.
RunReport run_drift_retrain(const TimeSeriesFrame& frame, const std::string& target, const StrategyConfig& config);

RunReport run_strategy(const TimeSeriesFrame& frame, const std::string& target, const StrategyConfig& config);

nlohmann::json to_json(const StrategyConfig& config);
nlohmann::json to_json(const RunReport& report);
std::string predictions_csv(const RunReport& report);

struct RunSummary {
	std::string dataset;
	std::string model;
	std::string strategy;
	std::string test_sha256;
	EvalReport eval;
};

RunSummary summarize(const RunReport& report);
RunSummary run_summary_from_json(const nlohmann::json& j);

struct ComparisonRow {
	std::string dataset;
	std::string model;
	std::string strategy;
	double mae = 0.0;
	double rmse = 0.0;
	double r2 = 0.0;
	// row minus its baseline
	std::optional<double> delta_mae, delta_rmse, delta_r2;
	// (baseline - row) / baseline for errors, (row - baseline) / |baseline| for r2
	std::optional<double> rel_mae_reduction, rel_rmse_reduction, rel_r2_increase;
};

struct ComparisonTable {
	std::vector<ComparisonRow> rows;
};

/// Every row is matched with the baseline run of the same dataset and model.
/// Runs on one dataset must share a test block. A single run gets blank deltas.
ComparisonTable compare(const std::vector<RunSummary>& runs);

std::string to_csv(const ComparisonTable& table);
std::string comparison_svg(const ComparisonTable& table);

} // namespace driftcast
