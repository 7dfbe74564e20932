#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "../bitword.hpp"

namespace vtcode::tvtd {

/// Hyperparameters of the transformer decoder. The feed-forward width is always
/// 4 * d_model.
struct TvtdConfig {
    std::size_t n = 20;            // code length
    std::size_t max_drift = 4;     // received words may be up to n + max_drift long
    std::size_t d_model = 128;
    std::size_t n_layers = 3;      // decoder layers
    std::size_t n_heads = 4;
    std::size_t window = 20;       // self-attention looks back at most `window` positions
    std::size_t encoder_layers = 0;  // 0: the memory is the embedded corrupted word itself
    bool stat_memory = true;       // statistic embedding on the corrupted word
    bool stat_target = true;       // running-prefix statistics on the predicted word
    double lr = 5e-4;
    std::size_t warmup_steps = 0;
    std::size_t epochs = 50;
    std::size_t batch = 64;
    std::uint64_t seed = 1;

    [[nodiscard]] std::size_t d_ff() const noexcept { return 4 * d_model; }
    [[nodiscard]] std::size_t head_dim() const noexcept { return d_model / n_heads; }
    [[nodiscard]] std::size_t max_received() const noexcept { return n + max_drift; }
    /// Largest position-index sum a received word can have.
    [[nodiscard]] std::size_t memory_stat_max() const noexcept { return max_received() * (max_received() + 1) / 2; }
    [[nodiscard]] std::size_t target_stat_max() const noexcept { return n * (n + 1) / 2; }

    void validate() const {
        if (n < 2) throw ParamError("TvtdConfig: n must be at least 2");
        if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
            throw ParamError("TvtdConfig: d_model must be a positive multiple of n_heads");
        if (window < 1) throw ParamError("TvtdConfig: window must be >= 1");
        if (n_layers < 1) throw ParamError("TvtdConfig: need at least one decoder layer");
        if (batch < 1) throw ParamError("TvtdConfig: batch must be >= 1");
        if (!(lr > 0)) throw ParamError("TvtdConfig: lr must be positive");
    }

    /// Settings used for the full-size experiments: d = 512, 3 layers of 8 heads, lr 1e-4,
    /// 200 epochs, window n/4 for long codes and 20 for n = 20.
    static TvtdConfig paper_preset(std::size_t n) {
        TvtdConfig c;
        c.n = n;
        c.d_model = 512;
        c.n_layers = 3;
        c.n_heads = 8;
        c.lr = 1e-4;
        c.epochs = 200;
        c.window = n <= 20 ? 20 : n / 4;
        return c;
    }

    /// Default for laptop-scale runs on VT(20,14).
    static TvtdConfig desk_preset(std::size_t n = 20) {
        TvtdConfig c;
        c.n = n;
        c.window = n <= 20 ? 20 : n / 4;
        c.lr = 2e-3;
        c.warmup_steps = 400;
        c.epochs = 50;
        return c;
    }

    [[nodiscard]] std::string to_text() const {
        std::ostringstream os;
        os.precision(17);
        os << "n=" << n << "\nmax_drift=" << max_drift << "\nd_model=" << d_model << "\nn_layers=" << n_layers
           << "\nn_heads=" << n_heads << "\nd_ff=" << d_ff() << "\nwindow=" << window
           << "\nencoder_layers=" << encoder_layers << "\nstat_memory=" << (stat_memory ? 1 : 0)
           << "\nstat_target=" << (stat_target ? 1 : 0) << "\nlr=" << lr << "\nwarmup_steps=" << warmup_steps
           << "\nepochs=" << epochs << "\nbatch=" << batch << "\nseed=" << seed << "\n";
        return os.str();
    }

    /// Parses flat key=value lines ('#' starts a comment). Unset keys keep the values
    /// already in `base`.
    static TvtdConfig from_text(const std::string& text) { return from_text(text, TvtdConfig()); }
    static TvtdConfig from_text(const std::string& text, TvtdConfig base) {
        std::istringstream is(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return base;
    }

    static TvtdConfig from_file(const std::string& path) { return from_file(path, TvtdConfig()); }
    static TvtdConfig from_file(const std::string& path, TvtdConfig base) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open config file " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return from_text(ss.str(), base);
    }

    void set(const std::string& key, const std::string& value) {
        auto as_size = [&]() -> std::size_t {
            std::size_t v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc{} || p != value.data() + value.size())
                throw ParseError("config: bad integer for " + key + ": '" + value + "'");
            return v;
        };
        auto as_double = [&]() {
            try {
                std::size_t used = 0;
                const double v = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::logic_error&) {
                throw ParseError("config: bad number for " + key + ": '" + value + "'");
            }
        };
        if (key == "n") n = as_size();
        else if (key == "max_drift") max_drift = as_size();
        else if (key == "d_model") d_model = as_size();
        else if (key == "n_layers") n_layers = as_size();
        else if (key == "n_heads") n_heads = as_size();
        else if (key == "d_ff") {
            if (as_size() != 4 * d_model) throw ParseError("config: d_ff must equal 4 * d_model");
        } else if (key == "window") window = as_size();
        else if (key == "encoder_layers") encoder_layers = as_size();
        else if (key == "stat_memory") stat_memory = as_size() != 0;
        else if (key == "stat_target") stat_target = as_size() != 0;
        else if (key == "lr") lr = as_double();
        else if (key == "warmup_steps") warmup_steps = as_size();
        else if (key == "epochs") epochs = as_size();
        else if (key == "batch") batch = as_size();
        else if (key == "seed") seed = as_size();
        else throw ParseError("config: unknown key '" + key + "'");
    }

    friend bool operator==(const TvtdConfig&, const TvtdConfig&) = default;
};

}  // namespace vtcode::tvtd
