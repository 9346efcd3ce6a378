#include "driftcast/mlp.hpp"

#include "../support/oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace driftcast;
using driftcast::testing::errc_of;
using driftcast::testing::hourly;

namespace {

FeatureMatrix linear_data(std::size_t n, std::uint64_t seed, double noise = 0.0) {
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u(-1.0, 1.0);
	std::normal_distribution<double> e(0.0, 1.0);
	FeatureMatrix fm;
	fm.x = Matrix(static_cast<Eigen::Index>(n), 1);
	fm.y = Vector(static_cast<Eigen::Index>(n));
	for (Eigen::Index i = 0; i < fm.x.rows(); ++i) {
		fm.x(i, 0) = u(rng);
		fm.y(i) = 2.0 * fm.x(i, 0) + 1.0 + noise * e(rng);
	}
	fm.feature_names = {"x"};
	fm.timestamps = hourly(n);
	fm.target = "y";
	return fm;
}

MlpConfig small_config() {
	MlpConfig c;
	c.hidden = {16, 16};
	c.dropout_rate = 0.0;
	c.learning_rate = 1e-2;
	c.batch_size = 32;
	c.max_epochs = 200;
	c.patience = 20;
	c.seed = 7;
	return c;
}

} // namespace

TEST(MlpForward, ZeroWeightsGiveOutputBias) {
	std::mt19937_64 rng(1);
	MlpConfig config;
	config.hidden = {5, 3};
	auto model = mlp_init(4, config, rng);
	for (auto& layer : model.layers) {
		layer.weights.setZero();
		layer.bias.setZero();
	}
	model.layers.back().bias(0) = 2.5;
	const Matrix x = Matrix::Random(7, 4);
	const Vector out = mlp_forward(model, x, Mode::Eval);
	EXPECT_TRUE((out.array() == 2.5).all());
	std::mt19937_64 mask_rng(2);
	EXPECT_TRUE((mlp_forward(model, x, Mode::Train, &mask_rng).array() == 2.5).all());
}

TEST(MlpForward, NoDropoutMeansTrainEqualsEval) {
	std::mt19937_64 rng(3);
	MlpConfig config;
	config.hidden = {8, 8};
	config.dropout_rate = 0.0;
	const auto model = mlp_init(5, config, rng);
	const Matrix x = Matrix::Random(20, 5);
	std::mt19937_64 mask_rng(4);
	EXPECT_EQ(mlp_forward(model, x, Mode::Train, &mask_rng), mlp_forward(model, x, Mode::Eval));
}

TEST(MlpForward, ShapeMismatch) {
	std::mt19937_64 rng(3);
	const auto model = mlp_init(5, MlpConfig{}, rng);
	EXPECT_EQ(errc_of([&] { mlp_forward(model, Matrix::Zero(2, 4), Mode::Eval); }), Errc::ShapeMismatch);
	EXPECT_EQ(errc_of([&] { mlp_forward(model, Matrix::Zero(2, 5), Mode::Train); }), Errc::InvalidArgument);
}

TEST(MlpForward, HeUniformBounds) {
	std::mt19937_64 rng(5);
	MlpConfig config;
	config.hidden = {64, 32};
	const auto model = mlp_init(10, config, rng);
	ASSERT_EQ(model.layers.size(), 3u);
	EXPECT_EQ(model.layers[0].weights.rows(), 10);
	EXPECT_EQ(model.layers[1].weights.rows(), 64);
	EXPECT_EQ(model.layers[2].weights.cols(), 1);
	EXPECT_LE(model.layers[0].weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 10.0));
	EXPECT_LE(model.layers[1].weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 64.0));
	EXPECT_TRUE(model.layers[0].bias.isZero());
}

TEST(MlpGradients, MatchCentralDifferences) {
	std::mt19937_64 rng(11);
	for (int net = 0; net < 10; ++net) {
		const auto c = oracle::random_gradient_case(rng, 3, {4}, 6);
		EXPECT_LT(oracle::max_gradient_error(c.model, c.x, c.y, 1e-5), 1e-5) << "network " << net;
	}
	for (int net = 0; net < 5; ++net) {
		const auto c = oracle::random_gradient_case(rng, 5, {6, 4}, 4);
		EXPECT_LT(oracle::max_gradient_error(c.model, c.x, c.y, 1e-5), 1e-5) << "deep network " << net;
	}
}

TEST(MlpGradients, PerfectFitHasZeroGradient) {
	std::mt19937_64 rng(12);
	const auto c = oracle::random_gradient_case(rng, 3, {4}, 6);
	const Vector y = mlp_forward(c.model, c.x, nullptr);
	const auto g = mlp_gradients(c.model, c.x, y);
	EXPECT_EQ(g.loss, 0.0);
	for (std::size_t l = 0; l < g.weights.size(); ++l) {
		EXPECT_TRUE(g.weights[l].isZero());
		EXPECT_TRUE(g.biases[l].isZero());
	}
}

TEST(MlpGradients, OutputBiasIsMeanResidual) {
	std::mt19937_64 rng(13);
	const auto c = oracle::random_gradient_case(rng, 3, {4, 4}, 9);
	const auto g = mlp_gradients(c.model, c.x, c.y);
	const Vector pred = mlp_forward(c.model, c.x, nullptr);
	EXPECT_NEAR(g.biases.back()(0), (2.0 * (pred - c.y)).mean(), 1e-12);
	EXPECT_NEAR(g.loss, (pred - c.y).squaredNorm() / 9.0, 1e-12);
}

TEST(MlpGradients, MaskedGradientsMatchMaskedLoss) {
	std::mt19937_64 rng(14);
	auto c = oracle::random_gradient_case(rng, 3, {6}, 5);
	c.model.dropout_rate = 0.5;
	const auto masks = sample_dropout(c.model, 5, rng);
	const auto g = mlp_gradients(c.model, c.x, c.y, &masks);
	auto probe = c.model;
	const double eps = 1e-6;
	for (Eigen::Index i = 0; i < probe.layers[0].weights.size(); ++i) {
		double& w = probe.layers[0].weights.data()[i];
		const double saved = w;
		w = saved + eps;
		const double up = oracle::mlp_loss(probe, c.x, c.y, &masks);
		w = saved - eps;
		const double down = oracle::mlp_loss(probe, c.x, c.y, &masks);
		w = saved;
		EXPECT_NEAR(g.weights[0].data()[i], (up - down) / (2 * eps), 1e-6);
	}
}

TEST(Dropout, MasksAreZeroOrScaled) {
	std::mt19937_64 rng(20);
	MlpConfig config;
	config.dropout_rate = 0.25;
	const auto model = mlp_init(3, config, rng);
	const auto masks = sample_dropout(model, 100, rng);
	ASSERT_EQ(masks.masks.size(), 2u);
	std::size_t kept = 0, total = 0;
	for (const auto& m : masks.masks) {
		for (Eigen::Index i = 0; i < m.size(); ++i) {
			const double v = m.data()[i];
			EXPECT_TRUE(v == 0.0 || v == 1.0 / 0.75);
			kept += v != 0.0;
			++total;
		}
	}
	EXPECT_NEAR(static_cast<double>(kept) / static_cast<double>(total), 0.75, 0.01);
}

TEST(Dropout, ExpectationMatchesEvalActivations) {
	std::mt19937_64 rng(21);
	MlpConfig config;
	config.hidden = {8, 4};
	config.dropout_rate = 0.3;
	auto model = mlp_init(3, config, rng);
	Matrix x(1, 3);
	x << 0.5, -1.0, 2.0;
	const Matrix eval = mlp_first_hidden(model, x, nullptr);
	Matrix sum = Matrix::Zero(eval.rows(), eval.cols());
	const int draws = 20000;
	for (int k = 0; k < draws; ++k) {
		const auto masks = sample_dropout(model, 1, rng);
		sum += mlp_first_hidden(model, x, &masks);
	}
	const Matrix mean = sum / draws;
	ASSERT_GT(eval.maxCoeff(), 0.0);
	for (Eigen::Index j = 0; j < eval.cols(); ++j) {
		if (eval(0, j) > 0.0) {
			EXPECT_LT(std::abs(mean(0, j) - eval(0, j)) / eval(0, j), 0.02) << "unit " << j;
		} else {
			EXPECT_EQ(mean(0, j), 0.0);
		}
	}
}

TEST(MlpTrain, LearnsLinearFunction) {
	const auto data = linear_data(500, 1);
	const auto fit = mlp_train(small_config(), data);
	const auto& r = fit.report;
	ASSERT_GE(r.best_epoch, 1u);
	EXPECT_LT(r.val_loss[r.best_epoch - 1], 1e-2);
	// the returned weights reproduce the best validation loss
	const auto val = data.slice_rows(450, 500);
	const Vector pred = mlp_predict(fit.model, val.x);
	const Vector scaled_err = (pred - val.y) / fit.model.target_scaler.stds()[0];
	EXPECT_NEAR(scaled_err.squaredNorm() / 50.0, r.val_loss[r.best_epoch - 1], 1e-9);
	Matrix probe(1, 1);
	probe << 0.25;
	EXPECT_NEAR(mlp_predict(fit.model, probe)(0), 1.5, 0.1);
}

TEST(MlpTrain, Deterministic) {
	const auto data = linear_data(300, 2, 0.1);
	auto config = small_config();
	config.dropout_rate = 0.2;
	config.max_epochs = 20;
	const auto a = mlp_train(config, data);
	const auto b = mlp_train(config, data);
	EXPECT_EQ(a.report.val_loss, b.report.val_loss);
	EXPECT_EQ(to_json(a.model).dump(), to_json(b.model).dump());
	config.seed = 8;
	EXPECT_NE(mlp_train(config, data).report.val_loss, a.report.val_loss);
}

TEST(MlpTrain, EarlyStoppingInvariants) {
	for (std::uint64_t seed : {1u, 2u, 3u}) {
		auto config = small_config();
		config.seed = seed;
		config.patience = 5;
		config.dropout_rate = 0.2;
		const auto fit = mlp_train(config, linear_data(300, seed, 0.5));
		const auto& r = fit.report;
		ASSERT_EQ(r.val_loss.size(), r.stopped_epoch);
		EXPECT_LE(r.best_epoch, r.stopped_epoch);
		EXPECT_LE(r.stopped_epoch, config.max_epochs);
		EXPECT_EQ(*std::min_element(r.val_loss.begin(), r.val_loss.end()), r.val_loss[r.best_epoch - 1]);
		if (r.stopped_epoch < config.max_epochs) {
			// the last `patience` epochs failed to beat the earlier record by min_delta
			const auto cut = r.val_loss.end() - static_cast<std::ptrdiff_t>(config.patience);
			const double before = *std::min_element(r.val_loss.begin(), cut);
			EXPECT_GE(*std::min_element(cut, r.val_loss.end()), before - config.min_delta);
		}
	}
}

TEST(MlpTrain, ConstantTargetStopsEarly) {
	auto data = linear_data(200, 3);
	data.y.setConstant(4.0);
	auto config = small_config();
	config.patience = 3;
	const auto fit = mlp_train(config, data);
	EXPECT_LT(fit.report.stopped_epoch, config.max_epochs);
	EXPECT_NEAR(mlp_predict(fit.model, data.x.topRows(5)).maxCoeff(), 4.0, 1e-6);
}

TEST(MlpTrain, Errors) {
	EXPECT_EQ(errc_of([&] { mlp_train(small_config(), linear_data(9, 1)); }), Errc::TooFewRows);
	auto config = small_config();
	config.learning_rate = 1e300;
	EXPECT_EQ(errc_of([&] { mlp_train(config, linear_data(200, 1)); }), Errc::NonFiniteLoss);
	config = small_config();
	config.dropout_rate = 1.0;
	EXPECT_EQ(errc_of([&] { mlp_train(config, linear_data(200, 1)); }), Errc::InvalidArgument);
}

TEST(MlpTrain, LossCsvAndModelJson) {
	auto config = small_config();
	config.max_epochs = 3;
	config.patience = 10;
	const auto fit = mlp_train(config, linear_data(100, 4));
	const auto csv = train_report_csv(fit.report);
	EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_loss,val_loss");
	EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
	const auto j = to_json(fit.model);
	EXPECT_EQ(j.at("architecture").at("hidden"), (std::vector<std::size_t>{16, 16}));
	EXPECT_EQ(j.at("layers").size(), 3u);
}
