// vt: command-line front end for encoding, corruption, decoding, training and benchmarks.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "vtcode/harness/ablation.hpp"
#include "vtcode/harness/evaluate.hpp"
#include "vtcode/tvtd/checkpoint.hpp"
#include "vtcode/tvtd/train.hpp"

using namespace vtcode;
using namespace vtcode::harness;
using json = nlohmann::ordered_json;

namespace {

constexpr int kValidationFailure = 2;

struct CodeArg {
    std::size_t n = 20;
    std::size_t a = 14;
};

CodeArg parse_code(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ParseError("--code expects n,a (e.g. 20,14), got '" + text + "'");
    try {
        return {std::stoul(text.substr(0, comma)), std::stoul(text.substr(comma + 1))};
    } catch (const std::logic_error&) {
        throw ParseError("--code expects two integers n,a, got '" + text + "'");
    }
}

/// Positional words, or one word per line on stdin when none are given.
std::vector<BitWord> read_words(const std::vector<std::string>& args) {
    std::vector<BitWord> out;
    if (!args.empty()) {
        for (const auto& a : args) out.push_back(BitWord::parse(a));
        return out;
    }
    std::string line;
    while (std::getline(std::cin, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        out.push_back(BitWord::parse(line.substr(0, line.find('\t'))));
    }
    return out;
}

std::ostream& output(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw Error("cannot write " + path);
    return file;
}

tvtd::TvtdConfig load_config(const std::string& path, std::size_t n, const std::vector<std::string>& overrides) {
    tvtd::TvtdConfig c = tvtd::TvtdConfig::desk_preset(n);
    if (!path.empty()) c = tvtd::TvtdConfig::from_file(path, c);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + kv + "'");
        c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.n != n) throw ParamError("config n = " + std::to_string(c.n) + " does not match --code n = " + std::to_string(n));
    c.validate();
    return c;
}

std::vector<ChannelSpec> parse_channels(const std::string& list) {
    std::vector<ChannelSpec> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(ChannelSpec::parse(item));
    if (out.empty()) throw ParseError("empty channel list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Varshamov-Tenengolts codes over insertion/deletion/substitution channels"};
    app.require_subcommand(1);

    // ---------------------------------------------------------------- encode
    auto* encode_cmd = app.add_subcommand("encode", "Encode messages (positional, stdin, or random)");
    std::string code_text = "20,14";
    std::vector<std::string> words;
    std::size_t random_count = 0;
    std::uint64_t seed = 1;
    encode_cmd->add_option("--code", code_text, "n,a")->capture_default_str();
    encode_cmd->add_option("--random", random_count, "Encode this many random messages instead");
    encode_cmd->add_option("--seed", seed)->capture_default_str();
    encode_cmd->add_option("messages", words, "Message bitstrings of length y");

    // ---------------------------------------------------------------- corrupt
    auto* corrupt_cmd = app.add_subcommand("corrupt", "Pass words through the insertion/deletion/substitution channel");
    std::string mode = "fixed", log_path;
    std::size_t k = 1;
    double rate = 0.01;
    corrupt_cmd->add_option("--mode", mode, "fixed or iid")->check(CLI::IsMember({"fixed", "iid"}))->capture_default_str();
    corrupt_cmd->add_option("--k", k, "Error count for --mode fixed")->capture_default_str();
    corrupt_cmd->add_option("--rate", rate, "Per-position error rate for --mode iid")->capture_default_str();
    corrupt_cmd->add_option("--seed", seed)->capture_default_str();
    corrupt_cmd->add_option("--log", log_path, "Write one JSON corruption log per word to this file");
    corrupt_cmd->add_option("words", words, "Codewords");

    // ---------------------------------------------------------------- decode
    auto* decode_cmd = app.add_subcommand("decode", "Decode received words; prints received<TAB>decoded");
    std::string algo = "hd", ckpt, channel_text = "fixed:1";
    bool with_llr = false;
    decode_cmd->add_option("--code", code_text, "n,a")->capture_default_str();
    decode_cmd->add_option("--algo", algo)->check(CLI::IsMember({"hd", "siso", "tvtd"}))->capture_default_str();
    decode_cmd->add_option("--channel", channel_text, "Channel assumed by the siso prior")->capture_default_str();
    decode_cmd->add_option("--ckpt", ckpt, "TVTD checkpoint");
    decode_cmd->add_flag("--llr", with_llr, "Append the siso LLRs as a third column");
    decode_cmd->add_option("--seed", seed)->capture_default_str();
    decode_cmd->add_option("words", words, "Received words");

    // ---------------------------------------------------------------- train
    auto* train_cmd = app.add_subcommand("train", "Train a TVTD model");
    std::string task_text = "fixed:1", config_path, out_path, dataset_path, curve_path;
    std::vector<std::string> overrides;
    std::uint64_t split_seed = 1;
    std::size_t epochs = 0, train_size = 0;
    train_cmd->add_option("--code", code_text, "n,a")->capture_default_str();
    train_cmd->add_option("--task", task_text, "fixed:K (0..K errors per sample) or iid:RATE")->capture_default_str();
    train_cmd->add_option("--config", config_path, "key=value config file (desk preset otherwise)");
    train_cmd->add_option("--set", overrides, "Override a config key, key=value");
    train_cmd->add_option("--out", out_path, "Checkpoint path")->required();
    train_cmd->add_option("--dataset", dataset_path, "Train on this TSV instead of sampling corruptions");
    train_cmd->add_option("--split-seed", split_seed, "Seed of the 80/20 codebook split")->capture_default_str();
    train_cmd->add_option("--train-size", train_size, "Random codewords per epoch when the codebook is too large to split");
    train_cmd->add_option("--epochs", epochs, "Override the config epoch count");
    train_cmd->add_option("--curve", curve_path, "Write the per-epoch loss curve as CSV");

    // ---------------------------------------------------------------- gen
    auto* gen_cmd = app.add_subcommand("gen", "Generate a corrupted/groundtruth TSV dataset");
    std::size_t count = 1000;
    bool split = false;
    std::string test_out;
    gen_cmd->add_option("--code", code_text, "n,a")->capture_default_str();
    gen_cmd->add_option("--channel", channel_text)->capture_default_str();
    gen_cmd->add_option("--count", count)->capture_default_str();
    gen_cmd->add_option("--seed", seed)->capture_default_str();
    gen_cmd->add_flag("--split", split, "Partition the whole codebook 80/20 (one row per codeword)");
    gen_cmd->add_option("--split-seed", split_seed)->capture_default_str();
    gen_cmd->add_option("--out", out_path, "Dataset (training part with --split); '-' for stdout")->capture_default_str();
    gen_cmd->add_option("--test-out", test_out, "Held-out part with --split");

    // ---------------------------------------------------------------- eval
    auto* eval_cmd = app.add_subcommand("eval", "BER/FER of a decoder; prints a table line and writes a JSON report");
    std::size_t trials = 10000;
    bool message_only = false, heldout = false, timing = false;
    std::string json_path;
    eval_cmd->add_option("--code", code_text, "n,a")->capture_default_str();
    eval_cmd->add_option("--channel", channel_text)->capture_default_str();
    eval_cmd->add_option("--algo", algo)->check(CLI::IsMember({"hd", "siso", "tvtd"}))->capture_default_str();
    eval_cmd->add_option("--ckpt", ckpt, "TVTD checkpoint");
    eval_cmd->add_option("--trials", trials)->capture_default_str();
    eval_cmd->add_option("--seed", seed)->capture_default_str();
    eval_cmd->add_option("--dataset", dataset_path, "Score this TSV instead of sampling trials");
    eval_cmd->add_flag("--heldout", heldout, "Sample codewords from the held-out part of the split");
    eval_cmd->add_option("--split-seed", split_seed)->capture_default_str();
    eval_cmd->add_flag("--message-only", message_only, "BER over the message bits only");
    eval_cmd->add_flag("--timing", timing, "Include wall-clock fields in the JSON (breaks byte-identical reruns)");
    eval_cmd->add_option("--json", json_path, "Report path ('-' for stdout)");

    // ---------------------------------------------------------------- time
    auto* time_cmd = app.add_subcommand("time", "Wall-clock of the decoders on the same corrupted words");
    time_cmd->add_option("--code", code_text, "n,a")->capture_default_str();
    time_cmd->add_option("--channel", channel_text)->capture_default_str();
    time_cmd->add_option("--count", count)->capture_default_str();
    time_cmd->add_option("--seed", seed)->capture_default_str();
    time_cmd->add_option("--ckpt", ckpt, "Also time this TVTD checkpoint");
    time_cmd->add_option("--json", json_path, "Report path ('-' for stdout)");

    // ---------------------------------------------------------------- ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "Train and score a TVTD ablation grid; writes CSV");
    std::string kind_text = "window", eval_list = "fixed:1,fixed:2";
    task_text = "fixed:2";
    ablate_cmd->add_option("--kind", kind_text, "window, statistic or encoder_depth")->capture_default_str();
    ablate_cmd->add_option("--code", code_text, "n,a")->capture_default_str();
    ablate_cmd->add_option("--config", config_path, "Base config file");
    ablate_cmd->add_option("--set", overrides, "Override a config key, key=value");
    ablate_cmd->add_option("--task", task_text, "Training task")->capture_default_str();
    ablate_cmd->add_option("--eval", eval_list, "Comma-separated evaluation channels")->capture_default_str();
    ablate_cmd->add_option("--trials", trials)->capture_default_str();
    ablate_cmd->add_option("--epochs", epochs, "Override the config epoch count");
    ablate_cmd->add_option("--seed", seed)->capture_default_str();
    ablate_cmd->add_option("--split-seed", split_seed)->capture_default_str();
    ablate_cmd->add_option("--out", out_path, "CSV path ('-' for stdout)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kValidationFailure;
    }

    try {
        const CodeArg ca = parse_code(code_text);

        if (*encode_cmd) {
            const VtParams code(ca.n, ca.a);
            std::vector<BitWord> messages;
            if (random_count) {
                Rng rng(seed);
                for (std::size_t i = 0; i < random_count; ++i) messages.push_back(random_message(code.y(), rng));
            } else {
                messages = read_words(words);
            }
            for (const auto& m : messages) std::cout << encode(m, code) << '\n';
            return 0;
        }

        if (*corrupt_cmd) {
            const ChannelSpec spec = mode == "fixed" ? ChannelSpec::fixed(k) : ChannelSpec::iid(rate);
            spec.validate();
            std::ofstream log_file;
            if (!log_path.empty()) {
                log_file.open(log_path, std::ios::binary);
                if (!log_file) throw Error("cannot write " + log_path);
            }
            const auto input = read_words(words);
            for (std::size_t i = 0; i < input.size(); ++i) {
                Rng rng = stream_rng(seed, i);
                const auto [r, log] = corrupt(input[i], spec, rng);
                std::cout << r << '\n';
                if (log_file) {
                    json j;
                    j["source"] = input[i].str();
                    j["result"] = r.str();
                    j["events"] = json::array();
                    for (const auto& e : log.events) {
                        json ev{{"kind", to_string(e.kind)}, {"position", e.position}};
                        if (e.inserted_bit) ev["bit"] = *e.inserted_bit;
                        j["events"].push_back(ev);
                    }
                    log_file << j.dump() << '\n';
                }
            }
            return 0;
        }

        if (*decode_cmd) {
            const VtCode code(ca.n, ca.a);
            const ChannelSpec channel = ChannelSpec::parse(channel_text);
            const auto input = read_words(words);
            if (algo == "siso") {
                for (const auto& r : input) {
                    const auto out = decode_siso(r, code, build_prior(channel, code.n(), r.size()));
                    std::cout << r << '\t' << out.decoded;
                    if (with_llr) {
                        std::cout << '\t';
                        for (std::size_t i = 0; i < out.llr.size(); ++i) std::cout << (i ? "," : "") << out.llr[i];
                    }
                    std::cout << '\n';
                }
                return 0;
            }
            if (with_llr) throw ParamError("--llr is only available with --algo siso");
            const auto dec = make_decoder(parse_decoder_kind(algo), code, channel, ckpt);
            const auto out = dec->decode(input);
            for (std::size_t i = 0; i < input.size(); ++i) std::cout << input[i] << '\t' << out[i] << '\n';
            return 0;
        }

        if (*train_cmd) {
            const VtParams code(ca.n, ca.a);
            const ChannelSpec task = ChannelSpec::parse(task_text);
            tvtd::TvtdConfig cfg = load_config(config_path, ca.n, overrides);
            if (epochs) cfg.epochs = epochs;
            tvtd::TvtdModel<float> model(cfg);
            tvtd::Trainer<float> trainer(model);
            tvtd::EpochSource source;
            std::size_t samples = 0;
            std::string data_note;
            if (!dataset_path.empty()) {
                std::vector<tvtd::TrainingPair> pairs;
                for (auto& row : read_tsv(dataset_path)) {
                    if (row.groundtruth.size() != ca.n) throw LengthError("dataset groundtruth length differs from n");
                    pairs.push_back({std::move(row.corrupted), std::move(row.groundtruth)});
                }
                samples = pairs.size();
                source = tvtd::fixed_source(std::move(pairs));
                data_note = "dataset:" + dataset_path;
            } else if (code.y() <= 20 && train_size == 0) {
                auto parts = split_codebook(code, split_seed);
                samples = parts.train.size();
                source = tvtd::regenerating_source(std::move(parts.train), task, cfg.max_received(), cfg.seed);
                data_note = "split:" + std::to_string(split_seed);
            } else {
                samples = train_size ? train_size : 13107;
                Rng rng = stream_rng(cfg.seed, 0x636f6465ull);
                std::vector<BitWord> cws;
                for (std::size_t i = 0; i < samples; ++i) cws.push_back(encode(random_message(code.y(), rng), code));
                source = tvtd::regenerating_source(std::move(cws), task, cfg.max_received(), cfg.seed);
                data_note = "random:" + std::to_string(samples);
            }
            std::ofstream curve_file;
            if (!curve_path.empty()) {
                curve_file.open(curve_path, std::ios::binary);
                if (!curve_file) throw Error("cannot write " + curve_path);
                curve_file << "epoch,loss,token_accuracy,lr,seconds\n";
            }
            tvtd::TrainOptions opt;
            opt.on_epoch = [&](const tvtd::EpochRecord& r) {
                std::cerr << "epoch " << r.epoch << "/" << cfg.epochs << "  loss " << r.loss << "  token-acc "
                          << r.token_accuracy << "  lr " << r.lr << "  " << r.seconds << "s\n";
                if (curve_file) curve_file << r.epoch << ',' << r.loss << ',' << r.token_accuracy << ',' << r.lr << ',' << r.seconds << '\n';
            };
            const auto curve = trainer.run(source, samples, opt);
            tvtd::Metadata meta{{"code", std::to_string(ca.n) + "," + std::to_string(ca.a)},
                                {"task", task.str()},
                                {"data", data_note},
                                {"epoch", std::to_string(curve.size())},
                                {"steps", std::to_string(trainer.steps())},
                                {"seed", std::to_string(cfg.seed)}};
            if (!curve.empty()) {
                std::ostringstream os;
                os.precision(9);
                os << curve.back().loss;
                meta["loss"] = os.str();
            }
            tvtd::save_checkpoint(model, out_path, meta);
            std::cerr << "wrote " << out_path << " (" << model.parameter_count() << " parameters)\n";
            return 0;
        }

        if (*gen_cmd) {
            const VtParams code(ca.n, ca.a);
            const ChannelSpec channel = ChannelSpec::parse(channel_text);
            if (split) {
                if (test_out.empty() || out_path.empty()) throw ParamError("--split needs --out and --test-out");
                const auto parts = split_codebook(code, split_seed);
                write_tsv(out_path, corrupt_each(parts.train, channel, seed));
                write_tsv(test_out, corrupt_each(parts.test, channel, seed + 1));
                std::cerr << "train " << parts.train.size() << " rows -> " << out_path << ", test " << parts.test.size()
                          << " rows -> " << test_out << '\n';
                return 0;
            }
            std::ofstream file;
            write_tsv(output(out_path, file), gen_dataset(code, channel, count, seed));
            return 0;
        }

        if (*eval_cmd) {
            const VtParams code(ca.n, ca.a);
            ExperimentSpec spec;
            spec.n = ca.n;
            spec.a = ca.a;
            spec.channel = ChannelSpec::parse(channel_text);
            spec.decoder = parse_decoder_kind(algo);
            spec.checkpoint = ckpt;
            spec.trials = trials;
            spec.seed = seed;
            spec.message_only = message_only;
            spec.validate();
            const auto dec = make_decoder(spec.decoder, code, spec.channel, ckpt);
            MetricsReport rep;
            if (!dataset_path.empty()) {
                rep = evaluate_rows(read_tsv(dataset_path), *dec, code, message_only);
                rep.channel = "dataset";
                rep.seed = seed;
            } else if (heldout) {
                rep = evaluate_rows(heldout_rows(split_codebook(code, split_seed).test, spec.channel, trials, seed), *dec,
                                    code, message_only);
                rep.channel = spec.channel.str();
                rep.seed = seed;
            } else {
                rep = evaluate(spec, *dec);
            }
            std::cout << table_line(rep) << '\n';
            if (!json_path.empty()) {
                std::ofstream file;
                output(json_path, file) << to_json(rep, timing).dump(2) << '\n';
            }
            return 0;
        }

        if (*time_cmd) {
            const VtParams code(ca.n, ca.a);
            const ChannelSpec channel = ChannelSpec::parse(channel_text);
            std::vector<std::unique_ptr<Decoder>> owned;
            owned.push_back(make_decoder(DecoderKind::hd, code, channel));
            owned.push_back(make_decoder(DecoderKind::siso, code, channel));
            if (!ckpt.empty()) owned.push_back(make_decoder(DecoderKind::tvtd, code, channel, ckpt));
            std::vector<const Decoder*> decs;
            for (const auto& d : owned) decs.push_back(d.get());
            const auto rep = time_decoders(code, channel, count, seed, decs);
            for (const auto& e : rep.entries)
                std::printf("%-5s %8zu words %10.4f s %12.1f words/s\n", e.decoder.c_str(), e.words, e.seconds,
                            e.words_per_second());
            std::printf("%s\n", rep.hardware.c_str());
            if (!json_path.empty()) {
                std::ofstream file;
                output(json_path, file) << to_json(rep).dump(2) << '\n';
            }
            return 0;
        }

        if (*ablate_cmd) {
            const tvtd::TvtdConfig base = load_config(config_path, ca.n, overrides);
            AblationOptions opt;
            opt.n = ca.n;
            opt.a = ca.a;
            opt.train_task = ChannelSpec::parse(task_text);
            opt.eval_channels = parse_channels(eval_list);
            opt.trials = trials;
            opt.seed = seed;
            opt.split_seed = split_seed;
            opt.epochs = epochs;
            opt.on_epoch = [](const std::string& variant, const tvtd::EpochRecord& r) {
                std::cerr << variant << " epoch " << r.epoch << " loss " << r.loss << '\n';
            };
            const auto rows = ablation_suite(parse_ablation_kind(kind_text), base, opt);
            std::ofstream file;
            write_csv(output(out_path, file), rows);
            return 0;
        }
    } catch (const ParamError& e) {
        std::cerr << "vt: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const ParseError& e) {
        std::cerr << "vt: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const LengthError& e) {
        std::cerr << "vt: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const tvtd::CheckpointError& e) {
        std::cerr << "vt: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const std::exception& e) {
        std::cerr << "vt: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
