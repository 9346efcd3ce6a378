#pragma once

#include "driftcast/features.hpp"
#include "driftcast/frame.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace driftcast {

struct LassoConfig {
	std::vector<double> alpha_grid{0.001, 0.01, 0.1, 1.0};
	std::size_t cv_folds = 5;
	std::size_t max_iter = 10'000;
	double tol = 1e-7;
	std::uint64_t seed = 0; // reserved; the solver is deterministic

	void validate() const;
};

inline double soft_threshold(double z, double t) noexcept {
	if (z > t) {
		return z - t;
	}
	if (z < -t) {
		return z + t;
	}
	return 0.0;
}

struct LassoFit {
	Vector coefficients;
	double intercept = 0.0;
	std::size_t sweeps = 0;
	/// False means max_iter was hit first. Treated as a warning, never thrown.
	bool converged = false;
};

/// Cyclic coordinate descent on (1/2n)||y - X b||^2 + alpha ||b||_1 after
/// centring X and y; the intercept is recovered from the means and never
/// penalized. `objective_trace`, when given, receives the objective after
/// every full sweep.
LassoFit lasso_fit(const Matrix& x, const Vector& y, double alpha, const LassoConfig& config,
                   std::vector<double>* objective_trace = nullptr);

/// Expanding-window fold: train on [0, train_end), validate on [train_end, val_end).
struct TimeSeriesFold {
	std::size_t train_end = 0;
	std::size_t val_end = 0;
};

/// k + 1 contiguous blocks, remainder going to the earliest blocks. Fold i
/// trains on blocks 1..i and validates on block i + 1.
std::vector<TimeSeriesFold> timeseries_folds(std::size_t n_rows, std::size_t k);

struct CvRecord {
	double alpha = 0.0;
	std::size_t fold = 0; // 1-based
	double val_mse = 0.0;
};

struct LassoModel {
	Vector coefficients; // on standardized features and target
	double intercept = 0.0;
	double chosen_alpha = 0.0;
	bool converged = true;
	Scaler input_scaler;
	Scaler target_scaler;
	std::vector<std::string> feature_names;
	std::vector<CvRecord> cv;
};

/// Grid search with expanding-window CV; scalers are refit inside each fold.
/// Ties go to the larger alpha. The final model is refit on every row.
LassoModel lasso_cv(const FeatureMatrix& features, const LassoConfig& config);

/// Raw features in, predictions in original target units out.
Vector lasso_predict(const LassoModel& model, const Matrix& x);

nlohmann::json to_json(const LassoModel& model);
std::string cv_report_csv(const std::vector<CvRecord>& records);

} // namespace driftcast
