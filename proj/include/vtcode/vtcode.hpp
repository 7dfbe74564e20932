#pragma once

// Everything at once: code, channel, decoders, TVTD and the benchmark harness.

#include "bitword.hpp"
#include "exact_map.hpp"
#include "harness/ablation.hpp"
#include "harness/dataset.hpp"
#include "harness/decoders.hpp"
#include "harness/evaluate.hpp"
#include "harness/metrics.hpp"
#include "hd_decoder.hpp"
#include "ids_channel.hpp"
#include "random.hpp"
#include "siso_decoder.hpp"
#include "tvtd/checkpoint.hpp"
#include "tvtd/infer.hpp"
#include "tvtd/train.hpp"
#include "vt_core.hpp"
