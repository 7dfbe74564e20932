#pragma once

// Teacher-forced training: mean per-bit cross-entropy, Adam, cosine-annealed learning rate.

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>

#include "../ids_channel.hpp"
#include "model.hpp"

namespace vtcode::tvtd {

class Divergence : public Error {
public:
    using Error::Error;
};

/// Adam with the usual moment constants; state shares the model's parameter layout.
template <class T>
class Adam {
public:
    explicit Adam(std::size_t size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : m_(size, T(0)), v_(size, T(0)), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(Buffer<T>& values, const Buffer<T>& grad, double lr) {
        ++t_;
        const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
        const T a = static_cast<T>(lr / c1);
        const T rc2 = static_cast<T>(1.0 / std::sqrt(c2));
        const T b1 = static_cast<T>(b1_), b2 = static_cast<T>(b2_), eps = static_cast<T>(eps_);
        for (std::size_t i = 0; i < values.size(); ++i) {
            m_[i] = b1 * m_[i] + (T(1) - b1) * grad[i];
            v_[i] = b2 * v_[i] + (T(1) - b2) * grad[i] * grad[i];
            values[i] -= a * m_[i] / (std::sqrt(v_[i]) * rc2 + eps);
        }
    }

    [[nodiscard]] std::size_t steps() const noexcept { return t_; }

private:
    Buffer<T> m_, v_;
    double b1_, b2_, eps_;
    std::size_t t_ = 0;
};

/// Linear warm-up over `warmup` steps, then cosine decay from lr to 0 at step `total`.
inline double cosine_lr(double lr, std::size_t step, std::size_t total, std::size_t warmup = 0) {
    if (warmup > 0 && step < warmup) return lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
    if (total <= warmup) return lr;
    const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
    return 0.5 * lr * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
}

/// One training sample for `codeword` under `task`. A fixed:K task draws the error count
/// uniformly from 0..K; an iid task corrupts at its rate. Received words longer than the
/// model's memory table are truncated.
inline TrainingPair make_training_pair(const BitWord& codeword, const ChannelSpec& task, std::size_t max_received,
                                       Rng& rng) {
    BitWord received;
    if (task.mode == ChannelMode::fixed_count) {
        const std::size_t k = static_cast<std::size_t>(uniform_below(rng, task.k + 1));
        received = corrupt_fixed(codeword, k, rng, task.type_weights).first;
    } else {
        received = corrupt_iid(codeword, task.rate, rng, task.type_weights).first;
    }
    if (received.size() > max_received) received = received.resized(max_received);
    return {std::move(received), codeword};
}

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double loss = 0;        // mean per-bit cross-entropy over the epoch
    double token_accuracy = 0;
    double lr = 0;          // learning rate of the last step
    double seconds = 0;
};

struct TrainOptions {
    std::size_t epochs = 0;  // 0: take the model config's value
    std::size_t max_steps = 0;  // stop early after this many optimizer steps (0: no limit)
    std::function<void(const EpochRecord&)> on_epoch;
};

/// Produces the training pairs of one epoch (0-based index).
using EpochSource = std::function<std::vector<TrainingPair>(std::size_t epoch)>;

/// Samples fresh corruptions of `codewords` every epoch from a seeded stream.
inline EpochSource regenerating_source(std::vector<BitWord> codewords, ChannelSpec task, std::size_t max_received,
                                       std::uint64_t seed) {
    return [codewords = std::move(codewords), task, max_received, seed](std::size_t epoch) {
        Rng rng = stream_rng(seed, 0x6461746100000000ull + epoch);
        std::vector<TrainingPair> pairs;
        pairs.reserve(codewords.size());
        for (const auto& cw : codewords) pairs.push_back(make_training_pair(cw, task, max_received, rng));
        return pairs;
    };
}

inline EpochSource fixed_source(std::vector<TrainingPair> pairs) {
    return [pairs = std::move(pairs)](std::size_t) { return pairs; };
}

template <class T>
class Trainer {
public:
    explicit Trainer(TvtdModel<T>& model) : model_(model), adam_(model.parameter_count()) {}

    std::vector<EpochRecord> run(const EpochSource& source, std::size_t samples_per_epoch,
                                 const TrainOptions& opt = {}) {
        const auto& cfg = model_.config();
        const std::size_t epochs = opt.epochs ? opt.epochs : cfg.epochs;
        const std::size_t steps_per_epoch = (samples_per_epoch + cfg.batch - 1) / cfg.batch;
        std::size_t total = epochs * steps_per_epoch;
        if (opt.max_steps) total = std::min(total, opt.max_steps);
        Rng shuffle_rng = stream_rng(cfg.seed, 0x73687566ull);
        Buffer<T> grad(model_.parameter_count());
        std::vector<EpochRecord> curve;
        std::size_t step = adam_.steps();
        for (std::size_t e = 0; e < epochs && step < total; ++e) {
            const auto t0 = std::chrono::steady_clock::now();
            std::vector<TrainingPair> data = source(e);
            // Fisher-Yates with the portable draw so the order is platform independent.
            for (std::size_t i = data.size(); i > 1; --i) std::swap(data[i - 1], data[uniform_below(shuffle_rng, i)]);
            EpochRecord rec;
            rec.epoch = e + 1;
            double loss_sum = 0;
            std::size_t tokens = 0, correct = 0;
            for (std::size_t off = 0; off < data.size() && step < total; off += cfg.batch) {
                const std::size_t len = std::min(cfg.batch, data.size() - off);
                std::fill(grad.begin(), grad.end(), T(0));
                const auto st = model_.loss_and_grad(std::span<const TrainingPair>(data.data() + off, len), &grad);
                if (!std::isfinite(static_cast<double>(st.loss)))
                    throw Divergence("training diverged at step " + std::to_string(step) + " (non-finite loss)");
                rec.lr = cosine_lr(cfg.lr, step, total, cfg.warmup_steps);
                adam_.step(model_.values(), grad, rec.lr);
                ++step;
                loss_sum += static_cast<double>(st.loss) * static_cast<double>(st.tokens);
                tokens += st.tokens;
                correct += st.correct;
            }
            rec.loss = tokens ? loss_sum / static_cast<double>(tokens) : 0.0;
            rec.token_accuracy = tokens ? static_cast<double>(correct) / static_cast<double>(tokens) : 0.0;
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            curve.push_back(rec);
            if (opt.on_epoch) opt.on_epoch(rec);
        }
        return curve;
    }

    [[nodiscard]] std::size_t steps() const noexcept { return adam_.steps(); }

private:
    TvtdModel<T>& model_;
    Adam<T> adam_;
};

}  // namespace vtcode::tvtd
