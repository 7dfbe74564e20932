#pragma once

// Uniform batch interface over the three decoders.

#include <memory>
#include <span>

#include "../hd_decoder.hpp"
#include "../siso_decoder.hpp"
#include "../tvtd/checkpoint.hpp"
#include "../tvtd/infer.hpp"

namespace vtcode::harness {

enum class DecoderKind { hd, siso, tvtd };

inline const char* to_string(DecoderKind k) {
    switch (k) {
        case DecoderKind::hd: return "hd";
        case DecoderKind::siso: return "siso";
        case DecoderKind::tvtd: return "tvtd";
    }
    return "?";
}

inline DecoderKind parse_decoder_kind(const std::string& s) {
    if (s == "hd") return DecoderKind::hd;
    if (s == "siso") return DecoderKind::siso;
    if (s == "tvtd") return DecoderKind::tvtd;
    throw ParseError("unknown decoder '" + s + "' (expected hd, siso or tvtd)");
}

class Decoder {
public:
    virtual ~Decoder() = default;
    [[nodiscard]] virtual DecoderKind kind() const = 0;
    [[nodiscard]] virtual std::vector<BitWord> decode(std::span<const BitWord> received) const = 0;
};

class HdBatch final : public Decoder {
public:
    explicit HdBatch(VtCode code) : code_(code) {}
    [[nodiscard]] DecoderKind kind() const override { return DecoderKind::hd; }
    [[nodiscard]] std::vector<BitWord> decode(std::span<const BitWord> received) const override {
        std::vector<BitWord> out;
        out.reserve(received.size());
        for (const auto& r : received) out.push_back(decode_hd(r, code_).decoded);
        return out;
    }

private:
    VtCode code_;
};

/// The channel prior is rebuilt for every word from the channel spec and its length.
class SisoBatch final : public Decoder {
public:
    SisoBatch(VtCode code, ChannelSpec channel) : code_(code), channel_(channel) {}
    [[nodiscard]] DecoderKind kind() const override { return DecoderKind::siso; }
    [[nodiscard]] std::vector<BitWord> decode(std::span<const BitWord> received) const override {
        std::vector<BitWord> out;
        out.reserve(received.size());
        for (const auto& r : received)
            out.push_back(decode_siso(r, code_, build_prior(channel_, code_.n(), r.size())).decoded);
        return out;
    }

private:
    VtCode code_;
    ChannelSpec channel_;
};

/// Received words longer than the model's memory table are truncated before decoding.
class TvtdBatch final : public Decoder {
public:
    explicit TvtdBatch(tvtd::TvtdModel<float> model, std::size_t chunk = 256)
        : model_(std::make_unique<tvtd::TvtdModel<float>>(std::move(model))), chunk_(chunk) {}
    [[nodiscard]] DecoderKind kind() const override { return DecoderKind::tvtd; }
    [[nodiscard]] const tvtd::TvtdModel<float>& model() const { return *model_; }
    [[nodiscard]] std::vector<BitWord> decode(std::span<const BitWord> received) const override {
        const tvtd::GreedyDecoder<float> dec(*model_);
        const std::size_t limit = model_->config().max_received();
        std::vector<BitWord> out;
        out.reserve(received.size());
        std::vector<BitWord> chunk;
        for (std::size_t off = 0; off < received.size(); off += chunk_) {
            chunk.clear();
            for (std::size_t i = off; i < std::min(received.size(), off + chunk_); ++i)
                chunk.push_back(received[i].size() > limit ? received[i].resized(limit) : received[i]);
            for (auto& r : dec.decode(chunk)) out.push_back(std::move(r.decoded));
        }
        return out;
    }

private:
    std::unique_ptr<tvtd::TvtdModel<float>> model_;
    std::size_t chunk_;
};

/// Loads the checkpoint for tvtd; `channel` only matters for siso.
inline std::unique_ptr<Decoder> make_decoder(DecoderKind kind, const VtCode& code, const ChannelSpec& channel,
                                             const std::string& checkpoint = {}) {
    switch (kind) {
        case DecoderKind::hd: return std::make_unique<HdBatch>(code);
        case DecoderKind::siso: return std::make_unique<SisoBatch>(code, channel);
        case DecoderKind::tvtd: {
            if (checkpoint.empty()) throw ParamError("the tvtd decoder needs a checkpoint");
            auto loaded = tvtd::load_checkpoint<float>(checkpoint, code.n());
            return std::make_unique<TvtdBatch>(std::move(loaded.model));
        }
    }
    throw ParamError("unknown decoder");
}

}  // namespace vtcode::harness
