#include "driftcast/lasso.hpp"

#include "driftcast/error.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace driftcast {

void LassoConfig::validate() const {
	if (alpha_grid.empty()) {
		throw Error(Errc::InvalidArgument, "alpha grid is empty");
	}
	for (double a : alpha_grid) {
		if (!(a >= 0.0) || !std::isfinite(a)) {
			throw Error(Errc::InvalidArgument, "alphas must be finite and non-negative");
		}
	}
	if (cv_folds < 1 || max_iter < 1 || !(tol > 0.0)) {
		throw Error(Errc::InvalidArgument, "cv_folds, max_iter and tol must be positive");
	}
}

LassoFit lasso_fit(const Matrix& x, const Vector& y, double alpha, const LassoConfig& config,
                   std::vector<double>* objective_trace) {
	if (y.size() != x.rows()) {
		throw Error(Errc::ShapeMismatch, "target length does not match rows");
	}
	if (x.rows() == 0) {
		throw Error(Errc::Empty, "no rows to fit");
	}
	if (!(alpha >= 0.0)) {
		throw Error(Errc::InvalidArgument, "alpha must be non-negative");
	}
	const double n = static_cast<double>(x.rows());
	const Eigen::Index d = x.cols();
	const Eigen::RowVectorXd x_mean = x.colwise().mean();
	const double y_mean = y.mean();
	const Matrix xc = x.rowwise() - x_mean;
	const Vector yc = y.array() - y_mean;

	// Covariance form: each coordinate update costs O(d) instead of O(n).
	const Eigen::MatrixXd gram = (xc.transpose() * xc) / n;
	const Vector corr = (xc.transpose() * yc) / n;
	const double y_sq = yc.squaredNorm() / n;

	LassoFit fit;
	fit.coefficients = Vector::Zero(d);
	Vector& beta = fit.coefficients;
	Vector gram_beta = Vector::Zero(d);

	const auto objective = [&] {
		return 0.5 * (y_sq - 2.0 * beta.dot(corr) + beta.dot(gram_beta)) + alpha * beta.lpNorm<1>();
	};

	for (std::size_t sweep = 1; sweep <= config.max_iter; ++sweep) {
		double max_change = 0.0;
		for (Eigen::Index j = 0; j < d; ++j) {
			const double g = gram(j, j);
			double updated = 0.0;
			if (g > 0.0) {
				const double rho = corr(j) - gram_beta(j) + g * beta(j);
				updated = soft_threshold(rho, alpha) / g;
			}
			const double delta = updated - beta(j);
			if (delta != 0.0) {
				beta(j) = updated;
				gram_beta += delta * gram.col(j);
				max_change = std::max(max_change, std::abs(delta));
			}
		}
		fit.sweeps = sweep;
		if (objective_trace != nullptr) {
			objective_trace->push_back(objective());
		}
		if (max_change < config.tol) {
			fit.converged = true;
			break;
		}
	}
	fit.intercept = y_mean - x_mean.dot(beta);
	return fit;
}

std::vector<TimeSeriesFold> timeseries_folds(std::size_t n_rows, std::size_t k) {
	if (k < 1) {
		throw Error(Errc::InvalidArgument, "need at least one fold");
	}
	if (n_rows < k + 1) {
		throw Error(Errc::TooFewRows, std::to_string(k) + " folds need at least " + std::to_string(k + 1) + " rows");
	}
	const std::size_t blocks = k + 1;
	const std::size_t base = n_rows / blocks;
	const std::size_t extra = n_rows % blocks;
	std::vector<std::size_t> ends;
	std::size_t end = 0;
	for (std::size_t b = 0; b < blocks; ++b) {
		end += base + (b < extra ? 1 : 0);
		ends.push_back(end);
	}
	std::vector<TimeSeriesFold> folds;
	for (std::size_t i = 0; i < k; ++i) {
		folds.push_back({ends[i], ends[i + 1]});
	}
	return folds;
}

namespace {

struct ScaledProblem {
	Scaler input;
	Scaler target;
	Matrix x;
	Vector y;
};

ScaledProblem standardize(const Matrix& x, const Vector& y, const std::vector<std::string>& names,
                          const std::string& target) {
	ScaledProblem p;
	p.input = Scaler::fit(x, names);
	p.target = Scaler::fit(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), target);
	p.x = p.input.apply(x);
	p.y = p.target.apply(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
	return p;
}

Vector predict_scaled(const LassoFit& fit, const ScaledProblem& p, const Matrix& x_raw) {
	const Vector z = (p.input.apply(x_raw) * fit.coefficients).array() + fit.intercept;
	return p.target.invert(z);
}

} // namespace

LassoModel lasso_cv(const FeatureMatrix& features, const LassoConfig& config) {
	config.validate();
	const std::size_t n = features.rows();
	if (n < config.cv_folds + 1) {
		throw Error(Errc::TooFewRows, "lasso CV needs at least " + std::to_string(config.cv_folds + 1) + " rows");
	}
	const auto folds = timeseries_folds(n, config.cv_folds);

	LassoModel model;
	model.feature_names = features.feature_names;
	double best_mse = std::numeric_limits<double>::infinity();
	double best_alpha = config.alpha_grid.front();
	for (double alpha : config.alpha_grid) {
		double total = 0.0;
		for (std::size_t f = 0; f < folds.size(); ++f) {
			const auto train = static_cast<Eigen::Index>(folds[f].train_end);
			const auto len = static_cast<Eigen::Index>(folds[f].val_end - folds[f].train_end);
			const auto p = standardize(features.x.topRows(train), features.y.head(train), features.feature_names,
			                           features.target);
			const auto fit = lasso_fit(p.x, p.y, alpha, config);
			const Vector pred = predict_scaled(fit, p, features.x.middleRows(train, len));
			const double mse = (pred - features.y.segment(train, len)).squaredNorm() / static_cast<double>(len);
			model.cv.push_back({alpha, f + 1, mse});
			total += mse;
		}
		const double mean = total / static_cast<double>(folds.size());
		if (mean < best_mse || (mean == best_mse && alpha > best_alpha)) {
			best_mse = mean;
			best_alpha = alpha;
		}
	}

	const auto p = standardize(features.x, features.y, features.feature_names, features.target);
	const auto fit = lasso_fit(p.x, p.y, best_alpha, config);
	model.coefficients = fit.coefficients;
	model.intercept = fit.intercept;
	model.chosen_alpha = best_alpha;
	model.converged = fit.converged;
	model.input_scaler = p.input;
	model.target_scaler = p.target;
	return model;
}

Vector lasso_predict(const LassoModel& model, const Matrix& x) {
	if (static_cast<std::size_t>(x.cols()) != static_cast<std::size_t>(model.coefficients.size())) {
		throw Error(Errc::ShapeMismatch, "input has " + std::to_string(x.cols()) + " columns, model expects " +
		                                     std::to_string(model.coefficients.size()));
	}
	const Vector z = (model.input_scaler.apply(x) * model.coefficients).array() + model.intercept;
	return model.target_scaler.invert(z);
}

nlohmann::json to_json(const LassoModel& model) {
	nlohmann::json coefs = nlohmann::json::object();
	for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
		coefs[model.feature_names[j]] = model.coefficients(static_cast<Eigen::Index>(j));
	}
	return {{"type", "lasso"},
	        {"coefficients", coefs},
	        {"feature_order", model.feature_names},
	        {"intercept", model.intercept},
	        {"chosen_alpha", model.chosen_alpha},
	        // the commonly quoted fixed choice; CV may or may not land on it
	        {"chosen_alpha_is_0_01", model.chosen_alpha == 0.01},
	        {"converged", model.converged},
	        {"input_scaler",
	         {{"names", model.input_scaler.names()},
	          {"means", model.input_scaler.means()},
	          {"stds", model.input_scaler.stds()}}},
	        {"target_scaler",
	         {{"names", model.target_scaler.names()},
	          {"means", model.target_scaler.means()},
	          {"stds", model.target_scaler.stds()}}}};
}

std::string cv_report_csv(const std::vector<CvRecord>& records) {
	std::string out = "alpha,fold,val_mse\n";
	char buf[96];
	for (const auto& r : records) {
		std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g\n", r.alpha, r.fold, r.val_mse);
		out += buf;
	}
	return out;
}

} // namespace driftcast
