// Encode a message, push it through a two-error channel and compare the decoders.

#include <iostream>

#include "vtcode/vtcode.hpp"

int main() {
    using namespace vtcode;

    const VtParams code(20, 14);
    const BitWord message = BitWord::parse("10110011101001");
    const BitWord cw = encode(message, code);
    std::cout << "message   " << message << "\ncodeword  " << cw << "  checksum " << checksum(cw, code) << "\n\n";

    Rng rng(2024);
    for (std::size_t k : {1, 2}) {
        const auto [received, log] = corrupt_fixed(cw, k, rng);
        std::cout << k << " error(s):";
        for (const auto& e : log.events) std::cout << ' ' << to_string(e.kind) << '@' << e.position;
        std::cout << "\nreceived  " << received << '\n';

        const auto hd = decode_hd(received, code);
        std::cout << "hd        " << hd.decoded << "  " << to_string(hd.status) << (hd.decoded == cw ? "  ok" : "  wrong")
                  << '\n';

        const auto siso = decode_siso(received, code, build_prior(ChannelSpec::fixed(k), code.n(), received.size()));
        std::cout << "siso      " << siso.decoded << (siso.decoded == cw ? "  ok" : "  wrong") << "\nllr      ";
        for (double l : siso.llr) std::cout << ' ' << static_cast<int>(std::round(std::max(-99.0, std::min(99.0, l))));
        std::cout << "\n\n";
    }

    harness::ExperimentSpec spec;
    spec.channel = ChannelSpec::fixed(2);
    spec.trials = 2000;
    for (auto kind : {harness::DecoderKind::hd, harness::DecoderKind::siso}) {
        spec.decoder = kind;
        std::cout << harness::table_line(harness::evaluate(spec)) << '\n';
    }
    return 0;
}
