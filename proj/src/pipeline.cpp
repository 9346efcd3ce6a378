#include "driftcast/pipeline.hpp"

#include "driftcast/error.hpp"
#include "driftcast/hash.hpp"
#include "driftcast/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace driftcast {

std::string strategy_name(Strategy s) { return s == Strategy::Baseline ? "baseline" : "retrain"; }
std::string model_name(ModelKind m) { return m == ModelKind::Mlp ? "mlp" : "lasso"; }

namespace {

struct Prepared {
	std::size_t boundary = 0;
	FeatureMatrix base;       // config.features over the whole frame
	FeatureMatrix model_base; // what the baseline model trains on
	Scaler eval_scaler;       // target over the base training rows
	std::string dataset_sha256;
	std::string test_sha256;
};

FeatureSpec baseline_spec(const StrategyConfig& config) {
	return config.enriched ? reduced_feature_spec(config.features) : config.features;
}

FeatureSpec retrain_spec(const StrategyConfig& config) {
	return config.enriched ? enriched_feature_spec(config.features) : config.features;
}

Prepared prepare(const TimeSeriesFrame& frame, const std::string& target, const StrategyConfig& config,
                 PipelineAudit& audit) {
	const std::size_t n = frame.rows();
	if (n < 10) {
		throw Error(Errc::TooFewRows, "pipeline needs at least 10 rows");
	}
	Prepared p;
	p.boundary = config.split.boundary(n);
	p.base = build_features(frame, target, config.features);
	const std::size_t w = p.base.origin_index;
	if (p.boundary <= w + 1 || p.boundary >= n) {
		throw Error(Errc::TooFewRows, "split boundary " + std::to_string(p.boundary) + " leaves no usable training or test rows after a warmup of " + std::to_string(w));
	}
	p.model_base = config.enriched ? build_features(frame, target, baseline_spec(config)) : p.base;

	const std::size_t train_rows = p.boundary - w;
	const Vector y_train = p.base.y.head(static_cast<Eigen::Index>(train_rows));
	p.eval_scaler = Scaler::fit(std::span<const double>(y_train.data(), train_rows), target);
	audit.scaler_end = std::max(audit.scaler_end, w + train_rows);

	p.dataset_sha256 = sha256_hex(to_csv(frame));
	const auto test = p.base.slice_rows(train_rows, p.base.rows());
	Sha256 h;
	h.update(std::string_view(reinterpret_cast<const char*>(test.timestamps.data()),
	                          test.timestamps.size() * sizeof(Timestamp)));
	h.update(std::span<const double>(test.x.data(), static_cast<std::size_t>(test.x.size())));
	h.update(std::span<const double>(test.y.data(), static_cast<std::size_t>(test.y.size())));
	p.test_sha256 = h.hex();

	audit.rows = n;
	audit.train_boundary = p.boundary;
	return p;
}

struct Trained {
	Vector test_pred;
	std::optional<TrainReport> train_report;
	std::vector<CvRecord> cv;
	nlohmann::json model;
};

/// Fits on frame rows [fit_begin, boundary) of `fm` and predicts frame rows [boundary, n).
Trained fit_and_predict(const StrategyConfig& config, const FeatureMatrix& fm, std::size_t fit_begin,
                        std::size_t boundary, PipelineAudit& audit) {
	const std::size_t w = fm.origin_index;
	fit_begin = std::max(fit_begin, w);
	const auto train = fm.slice_rows(fit_begin - w, boundary - w);
	const auto test = fm.slice_rows(boundary - w, fm.rows());
	audit.model_fit_end = std::max(audit.model_fit_end, train.origin_index + train.rows());
	audit.scaler_end = std::max(audit.scaler_end, train.origin_index + train.rows());

	Trained out;
	if (config.model == ModelKind::Mlp) {
		auto mlp_config = config.mlp;
		mlp_config.seed = config.seed;
		auto fit = mlp_train(mlp_config, train);
		out.test_pred = mlp_predict(fit.model, test.x);
		out.train_report = std::move(fit.report);
		out.model = to_json(fit.model);
	} else {
		auto lasso_config = config.lasso;
		lasso_config.seed = config.seed;
		const auto model = lasso_cv(train, lasso_config);
		out.test_pred = lasso_predict(model, test.x);
		out.cv = model.cv;
		out.model = to_json(model);
	}
	return out;
}

void finish_report(RunReport& report, const Prepared& p, const StrategyConfig& config, Trained trained) {
	const std::size_t w = p.base.origin_index;
	const auto test = p.base.slice_rows(p.boundary - w, p.base.rows());
	report.test_timestamps = test.timestamps;
	report.test_actual.assign(test.y.data(), test.y.data() + test.y.size());
	report.test_predicted.assign(trained.test_pred.data(), trained.test_pred.data() + trained.test_pred.size());

	Provenance prov{config.dataset_id, model_name(config.model), strategy_name(config.strategy), config.seed};
	if (config.scale == MetricScale::Standardized) {
		const Vector y = p.eval_scaler.apply(report.test_actual);
		const Vector y_hat = p.eval_scaler.apply(report.test_predicted);
		report.eval = evaluate(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
		                       std::span<const double>(y_hat.data(), static_cast<std::size_t>(y_hat.size())),
		                       config.scale, std::move(prov));
	} else {
		report.eval = evaluate(report.test_actual, report.test_predicted, config.scale, std::move(prov));
	}
	report.train_report = std::move(trained.train_report);
	report.cv = std::move(trained.cv);
	report.model = std::move(trained.model);
	report.config = config;
	report.dataset_sha256 = p.dataset_sha256;
	report.test_sha256 = p.test_sha256;
}

RunReport baseline_with(const Prepared& p, const StrategyConfig& config, RunReport report) {
	const std::size_t w = p.model_base.origin_index;
	report.full_training_rows = p.boundary - w;
	report.training_rows_used = report.full_training_rows;
	report.fit_start_row = w;
	auto trained = fit_and_predict(config, p.model_base, w, p.boundary, report.audit);
	finish_report(report, p, config, std::move(trained));
	return report;
}

} // namespace

RunReport run_baseline(const TimeSeriesFrame& frame, const std::string& target, const StrategyConfig& config) {
	RunReport report;
	const auto p = prepare(frame, target, config, report.audit);
	auto cfg = config;
	cfg.strategy = Strategy::Baseline;
	return baseline_with(p, cfg, std::move(report));
}

RunReport run_drift_retrain(const TimeSeriesFrame& frame, const std::string& target, const StrategyConfig& config) {
	auto cfg = config;
	cfg.strategy = Strategy::DriftRetrain;
	RunReport report;
	auto& audit = report.audit;
	const auto p = prepare(frame, target, cfg, audit);
	const auto& det = cfg.detection;
	const std::size_t base_w = p.base.origin_index;

	// Detection input: every stride-th training row, standardized on those rows.
	TimeSeriesFrame source;
	std::vector<std::string> columns;
	std::size_t det_offset = 0;
	if (det.on == DetectOn::Features) {
		const auto train = p.base.slice_rows(0, p.boundary - base_w);
		source = train.to_frame();
		columns = det.columns.empty() ? train.feature_names : det.columns;
		det_offset = train.origin_index;
	} else {
		source = frame.slice(0, p.boundary);
		columns = {target};
	}
	const std::size_t stride = std::max<std::size_t>(det.stride, 1);
	std::vector<std::vector<double>> standardized;
	std::size_t informative = 0;
	for (const auto& c : columns) {
		const auto all = source.column(c);
		std::vector<double> v;
		for (std::size_t i = 0; i < all.size(); i += stride) {
			v.push_back(all[i]);
		}
		const auto scaler = Scaler::fit(v, c);
		if (scaler.stds()[0] > Scaler::kStdFloor) {
			++informative;
		}
		const auto z = scaler.apply(v);
		standardized.emplace_back(z.data(), z.data() + z.size());
	}
	audit.detection_begin = det_offset;
	audit.detection_end = det_offset + source.rows();
	audit.scaler_end = std::max(audit.scaler_end, audit.detection_end);
	audit.detection_columns = columns;
	report.detection_stride = stride;

	const std::size_t det_rows = standardized.front().size();
	PenaltyConfig penalty;
	switch (det.penalty) {
	case PenaltyPolicy::StandardizedBic:
		// constant columns cost nothing and carry no degrees of freedom
		penalty.beta = 2.0 * static_cast<double>(std::max<std::size_t>(informative, 1)) *
		               std::log(static_cast<double>(det_rows));
		break;
	case PenaltyPolicy::Auto:
		for (const auto& v : standardized) {
			penalty.beta += default_penalty(v).beta;
		}
		break;
	case PenaltyPolicy::Fixed:
		penalty.beta = det.beta;
		break;
	}
	std::vector<std::span<const double>> spans(standardized.begin(), standardized.end());
	report.segmentation = pelt_detect(SegmentCost(spans, det.cost), penalty, det.min_size);
	for (auto cp : report.segmentation->changepoints) {
		report.changepoint_rows.push_back(det_offset + cp * stride);
	}

	const auto tau = last_changepoint(*report.segmentation);
	if (!tau) {
		report.fallback = true;
		report.note = "no changepoints detected; trained on the full training block";
		return baseline_with(p, cfg, std::move(report));
	}
	report.changepoint_row = det_offset + *tau * stride;

	// Rows whose lag/rolling lookback reaches behind the changepoint are skipped
	// so the retrain matrix only sees post-drift data.
	const auto spec = retrain_spec(cfg);
	const std::size_t start = *report.changepoint_row + spec.warmup();
	const std::size_t used = start < p.boundary ? p.boundary - start : 0;
	if (used < std::max<std::size_t>(det.min_retrain_rows, 10)) {
		report.fallback = true;
		report.note = "PostDriftTooShort: " + std::to_string(used) + " post-drift rows; trained on the full training block";
		return baseline_with(p, cfg, std::move(report));
	}

	const FeatureMatrix fm = cfg.enriched ? build_features(frame, target, spec) : p.base;
	report.full_training_rows = p.boundary - p.model_base.origin_index;
	report.training_rows_used = used;
	report.fit_start_row = start;
	report.note = "retrained on " + std::to_string(used) + " post-drift rows";
	auto trained = fit_and_predict(cfg, fm, start, p.boundary, audit);
	finish_report(report, p, cfg, std::move(trained));
	return report;
}

RunReport run_strategy(const TimeSeriesFrame& frame, const std::string& target, const StrategyConfig& config) {
	return config.strategy == Strategy::Baseline ? run_baseline(frame, target, config)
	                                             : run_drift_retrain(frame, target, config);
}

// ---------------------------------------------------------------------------
// serialization

nlohmann::json to_json(const StrategyConfig& c) {
	std::string penalty = "bic";
	if (c.detection.penalty == PenaltyPolicy::Auto) {
		penalty = "auto";
	} else if (c.detection.penalty == PenaltyPolicy::Fixed) {
		penalty = "fixed";
	}
	nlohmann::json j{
		{"strategy", strategy_name(c.strategy)},
		{"model", model_name(c.model)},
		{"seed", c.seed},
		{"dataset_id", c.dataset_id},
		{"scale", c.scale == MetricScale::Standardized ? "standardized" : "original"},
		{"enriched", c.enriched},
		{"split", {{"train_fraction", c.split.train_fraction}}},
		{"features",
		 {{"lags", c.features.lags},
		  {"rolling_windows", c.features.rolling_windows},
		  {"hour_of_day", c.features.hour_of_day},
		  {"day_of_week", c.features.day_of_week},
		  {"polynomial_degree", c.features.polynomial_degree}}},
	};
	if (c.model == ModelKind::Mlp) {
		j["mlp"] = {{"hidden", c.mlp.hidden},
		            {"dropout_rate", c.mlp.dropout_rate},
		            {"learning_rate", c.mlp.learning_rate},
		            {"batch_size", c.mlp.batch_size},
		            {"max_epochs", c.mlp.max_epochs},
		            {"patience", c.mlp.patience},
		            {"val_fraction", c.mlp.val_fraction}};
	} else {
		j["lasso"] = {{"alpha_grid", c.lasso.alpha_grid},
		              {"cv_folds", c.lasso.cv_folds},
		              {"max_iter", c.lasso.max_iter},
		              {"tol", c.lasso.tol}};
	}
	if (c.strategy == Strategy::DriftRetrain) {
		j["detection"] = {{"on", c.detection.on == DetectOn::Features ? "features" : "target"},
		                  {"columns", c.detection.columns},
		                  {"cost_model", cost_kind_name(c.detection.cost.kind)},
		                  {"penalty", penalty},
		                  {"beta", c.detection.beta},
		                  {"min_size", c.detection.min_size},
		                  {"stride", c.detection.stride},
		                  {"min_retrain_rows", c.detection.min_retrain_rows}};
	}
	return j;
}

nlohmann::json to_json(const RunReport& r) {
	nlohmann::json j{{"eval", to_json(r.eval)},
	                 {"training_rows_used", r.training_rows_used},
	                 {"full_training_rows", r.full_training_rows},
	                 {"fit_start_row", r.fit_start_row},
	                 {"config", to_json(r.config)},
	                 {"seed", r.config.seed},
	                 {"dataset_sha256", r.dataset_sha256},
	                 {"test_sha256", r.test_sha256},
	                 {"fallback", r.fallback},
	                 {"note", r.note}};
	if (r.segmentation) {
		j["segmentation"] = to_json(*r.segmentation);
		j["no_changepoints"] = r.segmentation->changepoints.empty();
	}
	if (r.changepoint_row) {
		j["changepoint_row"] = *r.changepoint_row;
	}
	if (r.segmentation) {
		j["detection_stride"] = r.detection_stride;
		j["changepoint_rows"] = r.changepoint_rows;
	}
	if (r.train_report) {
		j["train_report"] = {{"stopped_epoch", r.train_report->stopped_epoch},
		                     {"best_epoch", r.train_report->best_epoch}};
	}
	return j;
}

std::string predictions_csv(const RunReport& r) {
	std::string out = "timestamp,actual,predicted\n";
	char buf[96];
	for (std::size_t i = 0; i < r.test_actual.size(); ++i) {
		std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", r.test_actual[i], r.test_predicted[i]);
		out += format_timestamp(r.test_timestamps[i]);
		out += buf;
	}
	return out;
}

RunSummary summarize(const RunReport& r) {
	return {r.eval.provenance.dataset, r.eval.provenance.model, r.eval.provenance.strategy, r.test_sha256, r.eval};
}

RunSummary run_summary_from_json(const nlohmann::json& j) {
	RunSummary s;
	s.eval = eval_report_from_json(j.at("eval"));
	s.dataset = s.eval.provenance.dataset;
	s.model = s.eval.provenance.model;
	s.strategy = s.eval.provenance.strategy;
	s.test_sha256 = j.at("test_sha256").get<std::string>();
	return s;
}

// ---------------------------------------------------------------------------
// comparison

ComparisonTable compare(const std::vector<RunSummary>& runs) {
	if (runs.empty()) {
		throw Error(Errc::Empty, "nothing to compare");
	}
	std::map<std::string, std::string> test_block;
	for (const auto& r : runs) {
		const auto [it, inserted] = test_block.emplace(r.dataset, r.test_sha256);
		if (!inserted && it->second != r.test_sha256) {
			throw Error(Errc::MismatchedTestBlocks, "runs on '" + r.dataset + "' were evaluated on different test blocks");
		}
	}
	ComparisonTable table;
	for (const auto& r : runs) {
		ComparisonRow row{r.dataset, r.model, r.strategy, r.eval.mae, r.eval.rmse, r.eval.r2};
		const auto base = std::find_if(runs.begin(), runs.end(), [&](const RunSummary& b) {
			return b.dataset == r.dataset && b.model == r.model && b.strategy == "baseline";
		});
		if (runs.size() >= 2 && base != runs.end()) {
			const auto& b = base->eval;
			row.delta_mae = r.eval.mae - b.mae;
			row.delta_rmse = r.eval.rmse - b.rmse;
			row.delta_r2 = r.eval.r2 - b.r2;
			if (b.mae != 0.0) row.rel_mae_reduction = (b.mae - r.eval.mae) / b.mae;
			if (b.rmse != 0.0) row.rel_rmse_reduction = (b.rmse - r.eval.rmse) / b.rmse;
			if (b.r2 != 0.0) row.rel_r2_increase = (r.eval.r2 - b.r2) / std::abs(b.r2);
		}
		table.rows.push_back(std::move(row));
	}
	return table;
}

std::string to_csv(const ComparisonTable& table) {
	std::string out = "dataset,model,strategy,mae,rmse,r2,delta_mae,delta_rmse,delta_r2,rel_mae_reduction,"
	                  "rel_rmse_reduction,rel_r2_increase\n";
	const auto fmt = [](std::optional<double> v) {
		if (!v) {
			return std::string();
		}
		char buf[32];
		std::snprintf(buf, sizeof buf, "%.17g", *v);
		return std::string(buf);
	};
	for (const auto& r : table.rows) {
		out += r.dataset + "," + r.model + "," + r.strategy + "," + fmt(r.mae) + "," + fmt(r.rmse) + "," + fmt(r.r2) +
		       "," + fmt(r.delta_mae) + "," + fmt(r.delta_rmse) + "," + fmt(r.delta_r2) + "," +
		       fmt(r.rel_mae_reduction) + "," + fmt(r.rel_rmse_reduction) + "," + fmt(r.rel_r2_increase) + "\n";
	}
	return out;
}

std::string comparison_svg(const ComparisonTable& table) {
	std::vector<std::string> categories, groups;
	for (const auto& r : table.rows) {
		const auto key = r.dataset + " / " + r.model;
		if (std::find(categories.begin(), categories.end(), key) == categories.end()) categories.push_back(key);
		if (std::find(groups.begin(), groups.end(), r.strategy) == groups.end()) groups.push_back(r.strategy);
	}
	std::vector<svg::BarPanel> panels;
	for (const auto* metric : {"MAE", "RMSE", "R2"}) {
		svg::BarPanel panel{metric, categories, groups,
		                    std::vector<std::vector<double>>(groups.size(),
		                                                     std::vector<double>(categories.size(), std::nan("")))};
		for (const auto& r : table.rows) {
			const auto c = static_cast<std::size_t>(
				std::find(categories.begin(), categories.end(), r.dataset + " / " + r.model) - categories.begin());
			const auto g =
				static_cast<std::size_t>(std::find(groups.begin(), groups.end(), r.strategy) - groups.begin());
			const std::string m = metric;
			panel.values[g][c] = m == "MAE" ? r.mae : (m == "RMSE" ? r.rmse : r.r2);
		}
		panels.push_back(std::move(panel));
	}
	return svg::render("Metrics by model and strategy", panels);
}

} // namespace driftcast
