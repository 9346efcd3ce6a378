#pragma once

#include "driftcast/features.hpp"
#include "driftcast/frame.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace driftcast {

struct MlpConfig {
	std::vector<std::size_t> hidden{64, 64};
	double dropout_rate = 0.2;
	double learning_rate = 1e-3;
	std::size_t batch_size = 64;
	std::size_t max_epochs = 300;
	std::size_t patience = 10;
	double val_fraction = 0.1;
	/// Smallest drop in validation MSE that counts as an improvement.
	double min_delta = 1e-6;
	std::uint64_t seed = 0;

	void validate() const;
};

struct DenseLayer {
	Matrix weights; // fan_in x fan_out
	Vector bias;
};

/// ReLU hidden layers with inverted dropout, linear scalar output. The scalers
/// map raw features and target onto the scale the network was trained on.
struct MlpModel {
	std::vector<DenseLayer> layers;
	double dropout_rate = 0.0;
	Scaler input_scaler;
	Scaler target_scaler;

	std::size_t inputs() const noexcept {
		return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.rows());
	}
};

struct TrainReport {
	std::vector<double> train_loss;
	std::vector<double> val_loss;
	std::size_t stopped_epoch = 0; // 1-based
	std::size_t best_epoch = 0;    // 1-based
};

enum class Mode { Train, Eval };

/// One mask per hidden layer, entries 0 or 1/(1-p).
struct DropoutMasks {
	std::vector<Matrix> masks;
};

DropoutMasks sample_dropout(const MlpModel& model, std::size_t rows, std::mt19937_64& rng);

MlpModel mlp_init(std::size_t inputs, const MlpConfig& config, std::mt19937_64& rng);

/// Inputs must already be standardized. Eval mode ignores dropout; train mode
/// draws fresh masks from `rng`.
Vector mlp_forward(const MlpModel& model, const Matrix& x, Mode mode, std::mt19937_64* rng = nullptr);
/// Forward pass under fixed masks; a null pointer means eval mode.
Vector mlp_forward(const MlpModel& model, const Matrix& x, const DropoutMasks* masks);
/// First hidden layer activations after dropout, for checking the dropout expectation.
Matrix mlp_first_hidden(const MlpModel& model, const Matrix& x, const DropoutMasks* masks);

struct MlpGradients {
	std::vector<Matrix> weights;
	std::vector<Vector> biases;
	double loss = 0.0; // batch-mean squared error
};

MlpGradients mlp_gradients(const MlpModel& model, const Matrix& x, const Vector& y,
                           const DropoutMasks* masks = nullptr);

struct MlpFit {
	MlpModel model;
	TrainReport report;
};

/// Chronological tail of val_fraction rows is held out for early stopping;
/// the returned weights are those of the best validation epoch.
MlpFit mlp_train(const MlpConfig& config, const FeatureMatrix& features);

/// Raw features in, predictions in original target units out.
Vector mlp_predict(const MlpModel& model, const Matrix& x);

nlohmann::json to_json(const MlpModel& model);
std::string train_report_csv(const TrainReport& report);

} // namespace driftcast
