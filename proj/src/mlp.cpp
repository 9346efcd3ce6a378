#include "driftcast/mlp.hpp"

#include "driftcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace driftcast {

void MlpConfig::validate() const {
	if (hidden.empty() || std::find(hidden.begin(), hidden.end(), 0u) != hidden.end()) {
		throw Error(Errc::InvalidArgument, "hidden layers must be non-empty and positive");
	}
	if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
		throw Error(Errc::InvalidArgument, "dropout_rate must lie in [0, 1)");
	}
	if (patience < 1 || batch_size < 1 || max_epochs < 1) {
		throw Error(Errc::InvalidArgument, "patience, batch_size and max_epochs must be positive");
	}
	if (!(val_fraction > 0.0 && val_fraction < 0.5)) {
		throw Error(Errc::InvalidArgument, "val_fraction must lie in (0, 0.5)");
	}
	if (!(learning_rate > 0.0)) {
		throw Error(Errc::InvalidArgument, "learning_rate must be positive");
	}
}

MlpModel mlp_init(std::size_t inputs, const MlpConfig& config, std::mt19937_64& rng) {
	MlpModel model;
	model.dropout_rate = config.dropout_rate;
	std::size_t fan_in = inputs;
	auto add_layer = [&](std::size_t fan_out) {
		// He-uniform
		const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
		std::uniform_real_distribution<double> dist(-bound, bound);
		DenseLayer layer{Matrix(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out)),
		                 Vector::Zero(static_cast<Eigen::Index>(fan_out))};
		for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
			for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
				layer.weights(i, j) = dist(rng);
			}
		}
		model.layers.push_back(std::move(layer));
		fan_in = fan_out;
	};
	for (auto h : config.hidden) {
		add_layer(h);
	}
	add_layer(1);
	return model;
}

DropoutMasks sample_dropout(const MlpModel& model, std::size_t rows, std::mt19937_64& rng) {
	DropoutMasks out;
	const double p = model.dropout_rate;
	const double keep_scale = 1.0 / (1.0 - p);
	std::bernoulli_distribution keep(1.0 - p);
	for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
		Matrix m(static_cast<Eigen::Index>(rows), model.layers[l].weights.cols());
		for (Eigen::Index i = 0; i < m.rows(); ++i) {
			for (Eigen::Index j = 0; j < m.cols(); ++j) {
				m(i, j) = keep(rng) ? keep_scale : 0.0;
			}
		}
		out.masks.push_back(std::move(m));
	}
	return out;
}

namespace {

struct ForwardCache {
	std::vector<Matrix> inputs;          // input to each layer
	std::vector<Matrix> pre_activations; // hidden layers only
	Vector output;
};

void check_input(const MlpModel& model, const Matrix& x) {
	if (model.layers.empty()) {
		throw Error(Errc::InvalidArgument, "model has no layers");
	}
	if (static_cast<std::size_t>(x.cols()) != model.inputs()) {
		throw Error(Errc::ShapeMismatch, "input has " + std::to_string(x.cols()) + " columns, model expects " +
		                                     std::to_string(model.inputs()));
	}
}

ForwardCache forward(const MlpModel& model, const Matrix& x, const DropoutMasks* masks) {
	check_input(model, x);
	ForwardCache cache;
	Matrix a = x;
	const std::size_t hidden = model.layers.size() - 1;
	if (masks != nullptr && masks->masks.size() != hidden) {
		throw Error(Errc::ShapeMismatch, "dropout masks do not match hidden layers");
	}
	for (std::size_t l = 0; l < hidden; ++l) {
		const auto& layer = model.layers[l];
		Matrix z = a * layer.weights;
		z.rowwise() += layer.bias.transpose();
		cache.inputs.push_back(std::move(a));
		a = z.cwiseMax(0.0);
		if (masks != nullptr) {
			a = a.cwiseProduct(masks->masks[l]);
		}
		cache.pre_activations.push_back(std::move(z));
	}
	const auto& out = model.layers.back();
	cache.output = (a * out.weights).col(0).array() + out.bias(0);
	cache.inputs.push_back(std::move(a));
	return cache;
}

} // namespace

Vector mlp_forward(const MlpModel& model, const Matrix& x, const DropoutMasks* masks) {
	return forward(model, x, masks).output;
}

Vector mlp_forward(const MlpModel& model, const Matrix& x, Mode mode, std::mt19937_64* rng) {
	if (mode == Mode::Train && model.dropout_rate > 0.0) {
		if (rng == nullptr) {
			throw Error(Errc::InvalidArgument, "train mode needs a random generator");
		}
		const auto masks = sample_dropout(model, static_cast<std::size_t>(x.rows()), *rng);
		return forward(model, x, &masks).output;
	}
	return forward(model, x, nullptr).output;
}

Matrix mlp_first_hidden(const MlpModel& model, const Matrix& x, const DropoutMasks* masks) {
	auto cache = forward(model, x, masks);
	return cache.inputs.size() > 1 ? cache.inputs[1] : cache.inputs[0];
}

MlpGradients mlp_gradients(const MlpModel& model, const Matrix& x, const Vector& y, const DropoutMasks* masks) {
	if (x.rows() == 0) {
		throw Error(Errc::Empty, "empty batch");
	}
	if (y.size() != x.rows()) {
		throw Error(Errc::ShapeMismatch, "batch targets do not match rows");
	}
	const auto cache = forward(model, x, masks);
	const double rows = static_cast<double>(x.rows());
	const Vector residual = cache.output - y;

	MlpGradients g;
	g.loss = residual.squaredNorm() / rows;
	const std::size_t layers = model.layers.size();
	g.weights.resize(layers);
	g.biases.resize(layers);

	// dL/d(output) for the batch-mean MSE
	Matrix delta = (2.0 / rows) * residual;
	for (std::size_t l = layers; l-- > 0;) {
		g.weights[l] = cache.inputs[l].transpose() * delta;
		g.biases[l] = delta.colwise().sum().transpose();
		if (l == 0) {
			break;
		}
		Matrix upstream = delta * model.layers[l].weights.transpose();
		if (masks != nullptr) {
			upstream = upstream.cwiseProduct(masks->masks[l - 1]);
		}
		const auto& z = cache.pre_activations[l - 1];
		delta = upstream.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
	}
	return g;
}

namespace {

struct AdamState {
	std::vector<Matrix> m_w, v_w;
	std::vector<Vector> m_b, v_b;
	std::size_t step = 0;

	explicit AdamState(const MlpModel& model) {
		for (const auto& layer : model.layers) {
			m_w.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
			v_w.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
			m_b.push_back(Vector::Zero(layer.bias.size()));
			v_b.push_back(Vector::Zero(layer.bias.size()));
		}
	}

	void update(MlpModel& model, const MlpGradients& g, double lr) {
		constexpr double beta1 = 0.9;
		constexpr double beta2 = 0.999;
		constexpr double eps = 1e-8;
		++step;
		const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
		const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
		for (std::size_t l = 0; l < model.layers.size(); ++l) {
			m_w[l] = beta1 * m_w[l] + (1.0 - beta1) * g.weights[l];
			v_w[l] = beta2 * v_w[l] + (1.0 - beta2) * g.weights[l].cwiseProduct(g.weights[l]);
			model.layers[l].weights.array() -=
				lr * (m_w[l].array() / c1) / ((v_w[l].array() / c2).sqrt() + eps);
			m_b[l] = beta1 * m_b[l] + (1.0 - beta1) * g.biases[l];
			v_b[l] = beta2 * v_b[l] + (1.0 - beta2) * g.biases[l].cwiseProduct(g.biases[l]);
			model.layers[l].bias.array() -= lr * (m_b[l].array() / c1) / ((v_b[l].array() / c2).sqrt() + eps);
		}
	}
};

} // namespace

MlpFit mlp_train(const MlpConfig& config, const FeatureMatrix& features) {
	config.validate();
	const std::size_t n = features.rows();
	if (n < 10) {
		throw Error(Errc::TooFewRows, "MLP training needs at least 10 rows, got " + std::to_string(n));
	}
	if (static_cast<std::size_t>(features.y.size()) != n) {
		throw Error(Errc::ShapeMismatch, "features and target disagree in length");
	}
	const std::size_t val_rows =
		std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(config.val_fraction * static_cast<double>(n))));
	const std::size_t fit_rows = n - val_rows;
	const auto fit = static_cast<Eigen::Index>(fit_rows);
	const auto val = static_cast<Eigen::Index>(val_rows);

	MlpFit result;
	const Scaler input_scaler = Scaler::fit(Matrix(features.x.topRows(fit)), features.feature_names);
	const Vector y_fit = features.y.head(fit);
	const Scaler target_scaler = Scaler::fit(std::span<const double>(y_fit.data(), fit_rows), features.target);
	const Matrix x_all = input_scaler.apply(features.x);
	const Vector y_all = target_scaler.apply(std::span<const double>(features.y.data(), n));
	const Matrix x_val = x_all.bottomRows(val);
	const Vector y_val = y_all.tail(val);

	std::mt19937_64 rng(config.seed);
	MlpModel model = mlp_init(features.cols(), config, rng);
	model.input_scaler = input_scaler;
	model.target_scaler = target_scaler;
	AdamState adam(model);

	MlpModel best_model = model;
	double best_val = std::numeric_limits<double>::infinity();
	double reference = best_val;
	std::size_t wait = 0;

	std::vector<std::size_t> order(fit_rows);
	std::iota(order.begin(), order.end(), 0);
	Matrix xb;
	Vector yb;
	auto& report = result.report;
	for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
		std::shuffle(order.begin(), order.end(), rng);
		double loss_sum = 0.0;
		for (std::size_t start = 0; start < fit_rows; start += config.batch_size) {
			const std::size_t len = std::min(config.batch_size, fit_rows - start);
			xb.resize(static_cast<Eigen::Index>(len), x_all.cols());
			yb.resize(static_cast<Eigen::Index>(len));
			for (std::size_t i = 0; i < len; ++i) {
				const auto src = static_cast<Eigen::Index>(order[start + i]);
				xb.row(static_cast<Eigen::Index>(i)) = x_all.row(src);
				yb(static_cast<Eigen::Index>(i)) = y_all(src);
			}
			const auto masks = sample_dropout(model, len, rng);
			const auto grads = mlp_gradients(model, xb, yb, &masks);
			if (!std::isfinite(grads.loss)) {
				throw Error(Errc::NonFiniteLoss, "training loss diverged at epoch " + std::to_string(epoch));
			}
			adam.update(model, grads, config.learning_rate);
			loss_sum += grads.loss * static_cast<double>(len);
		}
		const double val_loss = (mlp_forward(model, x_val, nullptr) - y_val).squaredNorm() / static_cast<double>(val);
		if (!std::isfinite(val_loss)) {
			throw Error(Errc::NonFiniteLoss, "validation loss diverged at epoch " + std::to_string(epoch));
		}
		report.train_loss.push_back(loss_sum / static_cast<double>(fit_rows));
		report.val_loss.push_back(val_loss);
		report.stopped_epoch = epoch;

		if (val_loss < best_val) {
			best_val = val_loss;
			report.best_epoch = epoch;
			best_model = model;
		}
		if (val_loss < reference - config.min_delta) {
			reference = val_loss;
			wait = 0;
		} else if (++wait >= config.patience) {
			break;
		}
	}
	result.model = std::move(best_model);
	return result;
}

Vector mlp_predict(const MlpModel& model, const Matrix& x) {
	check_input(model, x);
	const Vector scaled = mlp_forward(model, model.input_scaler.apply(x), nullptr);
	return model.target_scaler.invert(scaled);
}

namespace {

nlohmann::json scaler_json(const Scaler& s) {
	return {{"names", s.names()}, {"means", s.means()}, {"stds", s.stds()}};
}

} // namespace

nlohmann::json to_json(const MlpModel& model) {
	nlohmann::json layers = nlohmann::json::array();
	std::vector<std::size_t> hidden;
	for (std::size_t l = 0; l < model.layers.size(); ++l) {
		const auto& layer = model.layers[l];
		if (l + 1 < model.layers.size()) {
			hidden.push_back(static_cast<std::size_t>(layer.weights.cols()));
		}
		layers.push_back({{"rows", layer.weights.rows()},
		                  {"cols", layer.weights.cols()},
		                  {"weights", std::vector<double>(layer.weights.data(),
		                                                  layer.weights.data() + layer.weights.size())},
		                  {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}});
	}
	return {{"type", "mlp"},
	        {"architecture",
	         {{"inputs", model.inputs()}, {"hidden", hidden}, {"activation", "relu"}, {"dropout_rate", model.dropout_rate}}},
	        {"layers", layers},
	        {"input_scaler", scaler_json(model.input_scaler)},
	        {"target_scaler", scaler_json(model.target_scaler)}};
}

std::string train_report_csv(const TrainReport& report) {
	std::string out = "epoch,train_loss,val_loss\n";
	char buf[96];
	for (std::size_t i = 0; i < report.train_loss.size(); ++i) {
		std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i + 1, report.train_loss[i], report.val_loss[i]);
		out += buf;
	}
	return out;
}

} // namespace driftcast
