#include "driftcast/cli.hpp"

#include "driftcast/changepoint.hpp"
#include "driftcast/error.hpp"
#include "driftcast/frame.hpp"
#include "driftcast/pipeline.hpp"
#include "driftcast/svg.hpp"
#include "driftcast/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fnmatch.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace driftcast {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw Error(Errc::Io, "cannot open '" + path.string() + "'");
	}
	std::ostringstream ss;
	ss << in.rdbuf();
	return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
	if (path.has_parent_path()) {
		std::error_code ec;
		fs::create_directories(path.parent_path(), ec);
	}
	std::ofstream out(path, std::ios::binary);
	if (!out || !(out << text)) {
		throw Error(Errc::Io, "cannot write '" + path.string() + "'");
	}
}

json parse_json(const fs::path& path) {
	try {
		return json::parse(read_file(path));
	} catch (const json::exception& e) {
		throw Error(Errc::InvalidArgument, "'" + path.string() + "' is not valid JSON: " + e.what());
	}
}

/// `path` minus a trailing extension, used to name sibling artifacts.
std::string artifact_stem(const fs::path& path) { return (path.parent_path() / path.stem()).string(); }

std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t flag_value, std::uint64_t fallback) {
	if (flag->count() > 0) {
		return flag_value;
	}
	if (const char* env = std::getenv("DRIFTCAST_SEED"); env != nullptr && *env != '\0') {
		try {
			std::size_t used = 0;
			const auto v = std::stoull(env, &used);
			if (used == std::string_view(env).size()) {
				return v;
			}
		} catch (const std::exception&) {
		}
		throw Error(Errc::InvalidArgument, std::string("DRIFTCAST_SEED is not an unsigned integer: '") + env + "'");
	}
	return fallback;
}

double parse_real(const std::string& text, const std::string& what) {
	try {
		std::size_t used = 0;
		const double v = std::stod(text, &used);
		if (used == text.size() && std::isfinite(v)) {
			return v;
		}
	} catch (const std::exception&) {
	}
	throw Error(Errc::InvalidArgument, what + " must be a finite number, got '" + text + "'");
}

std::vector<double> hours_since_start(std::span<const Timestamp> ts) {
	std::vector<double> x(ts.size());
	for (std::size_t i = 0; i < ts.size(); ++i) {
		x[i] = static_cast<double>(ts[i] - ts.front()) / static_cast<double>(kSecondsPerHour);
	}
	return x;
}

/// Loads `columns` (every column when empty) and forward-fills interior gaps.
TimeSeriesFrame load_filled(const fs::path& path, const std::vector<std::string>& columns) {
	if (!fs::exists(path)) {
		throw Error(Errc::Io, "no such file '" + path.string() + "'");
	}
	auto frame = load_csv(path, CsvSchema{"timestamp", columns});
	for (const auto& name : frame.column_names()) {
		frame = forward_fill(frame, name);
	}
	return frame;
}

int exit_code_for(Errc code) {
	switch (code) {
	case Errc::Io: return kExitIo;
	case Errc::NonFiniteLoss:
	case Errc::ZeroVariance: return kExitNumeric;
	default: return kExitUsage;
	}
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
	std::string config;
	std::string out;
	std::uint64_t seed = 0;
	CLI::Option* seed_flag = nullptr;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
	SynthConfig config;
	std::uint64_t fallback = config.seed;
	if (!a.config.empty()) {
		const auto j = parse_json(a.config);
		config = synth_config_from_json(j);
		fallback = config.seed;
	}
	config.seed = resolve_seed(a.seed_flag, a.seed, fallback);
	config.validate();
	const auto frame = generate(config);
	write_file(a.out, to_csv(frame));
	const auto sidecar = artifact_stem(a.out) + ".json";
	write_file(sidecar, synth_sidecar(config).dump(2) + "\n");
	out << "wrote " << frame.rows() << " rows to " << a.out << " and " << sidecar << "\n";
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
	std::string data;
	std::vector<std::string> columns;
	std::string detect_on = "columns";
	std::string target;
	std::string beta = "auto";
	std::string cost = "l2";
	std::size_t min_size = 2;
	std::size_t stride = 1;
	bool per_column = false;
	std::string out;
	std::string plot;
};

void cmd_detect(const DetectArgs& a, std::ostream& out) {
	std::vector<std::string> columns = a.columns;
	if (a.detect_on == "target") {
		if (a.target.empty()) {
			throw Error(Errc::InvalidArgument, "--detect-on target needs --target");
		}
		columns = {a.target};
	}
	auto frame = load_filled(a.data, columns);
	if (columns.empty()) {
		columns = frame.column_names();
	}
	if (a.stride > 1) {
		std::vector<Timestamp> ts;
		std::vector<Column> cols;
		for (const auto& c : columns) {
			cols.push_back({c, {}});
		}
		for (std::size_t i = 0; i < frame.rows(); i += a.stride) {
			ts.push_back(frame.timestamps()[i]);
			for (std::size_t k = 0; k < columns.size(); ++k) {
				cols[k].values.push_back(frame.column(columns[k])[i]);
			}
		}
		frame = TimeSeriesFrame(std::move(ts), std::move(cols));
	}
	const CostModel model{parse_cost_kind(a.cost)};
	const auto beta_for = [&](const std::string& c) {
		return a.beta == "auto" ? default_penalty(frame.column(c)).beta : parse_real(a.beta, "--beta");
	};
	Segmentation seg;
	if (a.per_column) {
		// union of independent per-column segmentations
		seg.n = frame.rows();
		seg.cost_model = model.kind;
		for (const auto& c : columns) {
			const auto one = pelt_detect(frame.column(c), model, PenaltyConfig{beta_for(c)}, a.min_size);
			seg.changepoints.insert(seg.changepoints.end(), one.changepoints.begin(), one.changepoints.end());
			seg.total_cost += one.total_cost;
			seg.beta += one.beta;
		}
		std::sort(seg.changepoints.begin(), seg.changepoints.end());
		seg.changepoints.erase(std::unique(seg.changepoints.begin(), seg.changepoints.end()), seg.changepoints.end());
	} else {
		PenaltyConfig penalty;
		if (a.beta == "auto") {
			for (const auto& c : columns) {
				penalty.beta += beta_for(c);
			}
		} else {
			penalty.beta = parse_real(a.beta, "--beta");
		}
		seg = multivariate_detect(frame, columns, model, penalty, a.min_size);
	}

	json j = to_json(seg);
	j["columns"] = columns;
	std::vector<std::string> stamps;
	for (auto cp : seg.changepoints) {
		stamps.push_back(format_timestamp(frame.timestamps()[cp]));
	}
	j["changepoint_timestamps"] = stamps;
	j["stride"] = a.stride;
	j["per_column"] = a.per_column;
	if (a.out.empty()) {
		out << j.dump(2) << "\n";
	} else {
		write_file(a.out, j.dump(2) + "\n");
	}

	if (!a.plot.empty()) {
		svg::LinePlot plot{"Detected changepoints", "hours since start", "value", {}, {}};
		const auto x = hours_since_start(frame.timestamps());
		for (const auto& c : columns) {
			const auto v = frame.column(c);
			plot.series.push_back({c, x, {v.begin(), v.end()}});
		}
		for (auto cp : seg.changepoints) {
			plot.markers.push_back(x[cp]);
		}
		write_file(a.plot, svg::render(plot));
	}
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
	std::string data;
	std::string target;
	std::string model = "lasso";
	std::string strategy = "baseline";
	std::uint64_t seed = 0;
	CLI::Option* seed_flag = nullptr;
	std::string out;
	std::string dataset_id;
	bool enriched = false;
	std::string detect_on = "features";
	std::vector<std::string> detect_columns;
	std::string penalty = "bic";
	std::string cost = "l2";
	std::size_t min_size = 2;
	std::size_t min_retrain_rows = 168;
	std::size_t detect_stride = 168;
	double train_fraction = 0.8;
	std::string scale = "standardized";
	std::size_t max_epochs = 300;
	std::size_t patience = 10;
	double learning_rate = 1e-3;
	std::size_t batch_size = 64;
	std::vector<double> alphas{0.001, 0.01, 0.1, 1.0};
	std::size_t folds = 5;
};

void write_run_artifacts(const RunReport& report, const std::string& report_path) {
	const auto stem = artifact_stem(report_path);
	write_file(report_path, to_json(report).dump(2) + "\n");
	write_file(stem + ".predictions.csv", predictions_csv(report));
	write_file(stem + ".model.json", report.model.dump(2) + "\n");

	const auto x = hours_since_start(report.test_timestamps);
	svg::LinePlot pred{"Predicted vs actual (" + report.eval.provenance.model + ", " +
	                       report.eval.provenance.strategy + ")",
	                   "hours into test block", "value", {}, {}};
	pred.series.push_back({"actual", x, report.test_actual});
	pred.series.push_back({"predicted", x, report.test_predicted});
	write_file(stem + ".predictions.svg", svg::render(pred));

	if (report.train_report) {
		const auto& tr = *report.train_report;
		write_file(stem + ".loss.csv", train_report_csv(tr));
		std::vector<double> epochs(tr.train_loss.size());
		for (std::size_t i = 0; i < epochs.size(); ++i) {
			epochs[i] = static_cast<double>(i + 1);
		}
		svg::LinePlot loss{"Training and validation loss", "epoch", "MSE (scaled)", {}, {}};
		loss.series.push_back({"train", epochs, tr.train_loss});
		loss.series.push_back({"validation", epochs, tr.val_loss});
		loss.markers.push_back(static_cast<double>(tr.best_epoch));
		write_file(stem + ".loss.svg", svg::render(loss));
	}
	if (!report.cv.empty()) {
		write_file(stem + ".cv.csv", cv_report_csv(report.cv));
	}
}

void cmd_run(const RunArgs& a, std::ostream& out) {
	StrategyConfig config;
	config.strategy = a.strategy == "retrain" ? Strategy::DriftRetrain : Strategy::Baseline;
	config.model = a.model == "mlp" ? ModelKind::Mlp : ModelKind::Lasso;
	config.seed = resolve_seed(a.seed_flag, a.seed, config.seed);
	config.enriched = a.enriched;
	config.split.train_fraction = a.train_fraction;
	config.scale = a.scale == "original" ? MetricScale::Original : MetricScale::Standardized;
	config.dataset_id = a.dataset_id.empty() ? fs::path(a.data).stem().string() : a.dataset_id;

	config.mlp.max_epochs = a.max_epochs;
	config.mlp.patience = a.patience;
	config.mlp.learning_rate = a.learning_rate;
	config.mlp.batch_size = a.batch_size;
	config.lasso.alpha_grid = a.alphas;
	config.lasso.cv_folds = a.folds;

	auto& det = config.detection;
	det.on = a.detect_on == "target" ? DetectOn::Target : DetectOn::Features;
	det.columns = a.detect_columns;
	det.cost = CostModel{parse_cost_kind(a.cost)};
	det.min_size = a.min_size;
	det.min_retrain_rows = a.min_retrain_rows;
	det.stride = a.detect_stride;
	if (a.penalty == "bic") {
		det.penalty = PenaltyPolicy::StandardizedBic;
	} else if (a.penalty == "auto") {
		det.penalty = PenaltyPolicy::Auto;
	} else {
		det.penalty = PenaltyPolicy::Fixed;
		det.beta = parse_real(a.penalty, "--penalty");
		if (det.beta < 0.0) {
			throw Error(Errc::InvalidArgument, "--penalty must be non-negative");
		}
	}
	if (a.train_fraction <= 0.0 || a.train_fraction >= 1.0) {
		throw Error(Errc::InvalidArgument, "--train-fraction must lie in (0, 1)");
	}

	auto frame = load_filled(a.data, {a.target});
	out << "loaded " << frame.rows() << " rows from " << a.data;
	if (!frame.is_hourly()) {
		frame = forward_fill(resample_hourly(frame), a.target);
		out << "; " << frame.rows() << " after hourly resampling";
	}
	out << "\n";
	const auto report = run_strategy(frame, a.target, config);
	write_run_artifacts(report, a.out);

	out << config.dataset_id << " " << model_name(config.model) << " " << strategy_name(config.strategy)
	    << ": mae=" << report.eval.mae << " rmse=" << report.eval.rmse << " r2=" << report.eval.r2;
	if (report.fallback) {
		out << " (fallback: " << report.note << ")";
	}
	out << "\n";
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
	std::vector<std::string> reports;
	std::string out;
	std::string plot;
};

/// Expands `*`, `?` and `[...]` in the file-name part of a path. Matches are sorted.
std::vector<fs::path> expand_glob(const std::string& pattern) {
	const fs::path p(pattern);
	const auto name = p.filename().string();
	if (name.find_first_of("*?[") == std::string::npos) {
		return {p};
	}
	const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
	std::vector<fs::path> hits;
	std::error_code ec;
	for (const auto& entry : fs::directory_iterator(dir, ec)) {
		if (entry.is_regular_file() && fnmatch(name.c_str(), entry.path().filename().c_str(), 0) == 0) {
			hits.push_back(p.has_parent_path() ? dir / entry.path().filename() : entry.path().filename());
		}
	}
	std::sort(hits.begin(), hits.end());
	return hits;
}

void cmd_compare(const CompareArgs& a, std::ostream& out) {
	std::vector<RunSummary> runs;
	for (const auto& pattern : a.reports) {
		const auto paths = expand_glob(pattern);
		const bool globbed = paths.size() != 1 || paths.front().string() != pattern;
		for (const auto& path : paths) {
			const auto j = parse_json(path);
			// sibling model files match broad globs; only explicit paths must be reports
			if (globbed && !(j.is_object() && j.contains("eval") && j.contains("test_sha256"))) {
				continue;
			}
			try {
				runs.push_back(run_summary_from_json(j));
			} catch (const json::exception& e) {
				throw Error(Errc::InvalidArgument, "'" + path.string() + "' is not a run report: " + e.what());
			}
		}
	}
	if (runs.empty()) {
		throw Error(Errc::InvalidArgument, "no run reports matched");
	}
	const auto table = compare(runs);
	const auto csv = to_csv(table);
	if (a.out.empty()) {
		out << csv;
	} else {
		write_file(a.out, csv);
	}
	if (!a.plot.empty()) {
		write_file(a.plot, comparison_svg(table));
	}
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
	std::string csv;
	std::vector<std::string> columns;
	std::string markers;
	std::string title;
	std::string out;
};

/// Line plot of any CSV whose first column is a timestamp or an integer index
/// (predictions and loss files both qualify).
void cmd_plot(const PlotArgs& a) {
	const auto text = read_file(a.csv);
	const auto header = text.substr(0, text.find_first_of("\r\n"));
	const auto x_name = header.substr(0, header.find(','));
	const auto frame = parse_csv(text, CsvSchema{x_name, a.columns});

	std::vector<double> x;
	if (x_name == "timestamp") {
		x = hours_since_start(frame.timestamps());
	} else {
		for (auto t : frame.timestamps()) {
			x.push_back(static_cast<double>(t));
		}
	}
	svg::LinePlot plot{a.title.empty() ? fs::path(a.csv).filename().string() : a.title,
	                   x_name == "timestamp" ? "hours since start" : x_name, "value", {}, {}};
	for (const auto& c : frame.columns()) {
		plot.series.push_back({c.name, x, c.values});
	}
	if (!a.markers.empty()) {
		const auto seg = segmentation_from_json(parse_json(a.markers));
		for (auto cp : seg.changepoints) {
			if (cp < x.size()) {
				plot.markers.push_back(x[cp]);
			}
		}
	}
	write_file(a.out, svg::render(plot));
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
	CLI::App app{"Drift-aware retraining for hourly time-series forecasts", "driftcast"};
	app.require_subcommand(1);

	SynthArgs synth;
	auto* s = app.add_subcommand("synth", "Generate a seeded synthetic series with drift events");
	s->add_option("--config", synth.config, "JSON generator config (defaults when omitted)");
	s->add_option("--out", synth.out, "Output CSV; the sidecar is written next to it as <stem>.json")->required();
	synth.seed_flag = s->add_option("--seed", synth.seed, "RNG seed (else DRIFTCAST_SEED, else config/42)");

	DetectArgs detect;
	auto* d = app.add_subcommand("detect", "Run PELT changepoint detection on CSV columns");
	d->add_option("--data", detect.data, "Input CSV with a timestamp column")->required();
	d->add_option("--columns", detect.columns, "Columns to segment jointly (default: all)")->delimiter(',');
	d->add_option("--detect-on", detect.detect_on, "columns or target")->check(CLI::IsMember({"columns", "target"}));
	d->add_option("--target", detect.target, "Column used with --detect-on target");
	d->add_option("--beta", detect.beta, "Penalty per changepoint, or 'auto'");
	d->add_option("--cost", detect.cost, "Segment cost: l2 or normal")
		->check(CLI::IsMember({"l2", "normal", "L2Mean", "GaussianNLL"}));
	d->add_option("--min-size", detect.min_size, "Minimum segment length")->check(CLI::PositiveNumber);
	d->add_option("--stride", detect.stride, "Read every n-th row (168 removes daily and weekly phase)")
		->check(CLI::PositiveNumber);
	d->add_flag("--per-column", detect.per_column, "Segment each column alone and union the changepoints");
	d->add_option("--out", detect.out, "Segmentation JSON (stdout when omitted)");
	d->add_option("--plot", detect.plot, "SVG with the series and changepoint markers");

	RunArgs run;
	auto* r = app.add_subcommand("run", "Train and evaluate one model under one strategy");
	r->add_option("--data", run.data, "Input CSV with a timestamp column")->required();
	r->add_option("--target", run.target, "Column to forecast")->required();
	r->add_option("--model", run.model, "mlp or lasso")->check(CLI::IsMember({"mlp", "lasso"}));
	r->add_option("--strategy", run.strategy, "baseline or retrain")->check(CLI::IsMember({"baseline", "retrain"}));
	run.seed_flag = r->add_option("--seed", run.seed, "Seed (else DRIFTCAST_SEED, else 42)");
	r->add_option("--out", run.out, "Report JSON; sibling artifacts share its stem")->required();
	r->add_option("--dataset-id", run.dataset_id, "Dataset label (default: data file stem)");
	r->add_flag("--enriched", run.enriched, "Baseline without lags, retrain with an enriched lag set");
	r->add_option("--detect-on", run.detect_on, "features or target")->check(CLI::IsMember({"features", "target"}));
	r->add_option("--detect-columns", run.detect_columns, "Feature columns used for detection")->delimiter(',');
	r->add_option("--penalty", run.penalty, "bic, auto, or a fixed beta");
	r->add_option("--cost", run.cost, "Segment cost: l2 or normal")
		->check(CLI::IsMember({"l2", "normal", "L2Mean", "GaussianNLL"}));
	r->add_option("--min-size", run.min_size, "Minimum segment length")->check(CLI::PositiveNumber);
	r->add_option("--detect-stride", run.detect_stride, "Detection reads every n-th training row")
		->check(CLI::PositiveNumber);
	r->add_option("--min-retrain-rows", run.min_retrain_rows, "Shortest post-drift block worth retraining on");
	r->add_option("--train-fraction", run.train_fraction, "Chronological training share");
	r->add_option("--scale", run.scale, "standardized or original")
		->check(CLI::IsMember({"standardized", "original"}));
	r->add_option("--max-epochs", run.max_epochs, "MLP epoch cap")->check(CLI::PositiveNumber);
	r->add_option("--patience", run.patience, "MLP early-stopping patience")->check(CLI::PositiveNumber);
	r->add_option("--lr", run.learning_rate, "MLP Adam learning rate");
	r->add_option("--batch-size", run.batch_size, "MLP minibatch size")->check(CLI::PositiveNumber);
	r->add_option("--alphas", run.alphas, "Lasso alpha grid")->delimiter(',');
	r->add_option("--folds", run.folds, "Lasso time-series CV folds")->check(CLI::PositiveNumber);

	CompareArgs cmp;
	auto* c = app.add_subcommand("compare", "Tabulate run reports against their baselines");
	c->add_option("--reports", cmp.reports, "Report paths or globs")->required();
	c->add_option("--out", cmp.out, "Comparison CSV (stdout when omitted)");
	c->add_option("--plot", cmp.plot, "Grouped-bar SVG, one panel per metric");

	PlotArgs plot;
	auto* p = app.add_subcommand("plot", "Render a CSV (predictions, loss, data) as an SVG line plot");
	p->add_option("--csv", plot.csv, "CSV whose first column is a timestamp or an index")->required();
	p->add_option("--columns", plot.columns, "Columns to draw (default: all)")->delimiter(',');
	p->add_option("--markers", plot.markers, "Segmentation JSON; changepoints become vertical markers");
	p->add_option("--title", plot.title, "Plot title");
	p->add_option("--out", plot.out, "Output SVG")->required();

	try {
		std::vector<std::string> reversed(args.rbegin(), args.rend());
		app.parse(reversed);
	} catch (const CLI::Error& e) {
		return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
	}

	try {
		if (s->parsed()) {
			cmd_synth(synth, out);
		} else if (d->parsed()) {
			cmd_detect(detect, out);
		} else if (r->parsed()) {
			cmd_run(run, out);
		} else if (c->parsed()) {
			cmd_compare(cmp, out);
		} else if (p->parsed()) {
			cmd_plot(plot);
		}
	} catch (const Error& e) {
		err << "error: " << e.what() << "\n";
		return exit_code_for(e.code());
	} catch (const fs::filesystem_error& e) {
		err << "error: " << e.what() << "\n";
		return kExitIo;
	} catch (const std::exception& e) {
		err << "error: " << e.what() << "\n";
		return kExitUsage;
	}
	return kExitOk;
}

} // namespace driftcast
