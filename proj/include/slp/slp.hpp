#pragma once

// Umbrella include for the synthetic latent fingerprint toolkit.

#include "slp/config.hpp"
#include "slp/dataset.hpp"
#include "slp/error.hpp"
#include "slp/image.hpp"
#include "slp/imgproc.hpp"
#include "slp/manifest.hpp"
#include "slp/png_io.hpp"
#include "slp/rng.hpp"
#include "slp/synthfp.hpp"

#include "slp/nn/adam.hpp"
#include "slp/nn/layers.hpp"
#include "slp/nn/net.hpp"
#include "slp/nn/tensor.hpp"

#include "slp/gan/losses.hpp"
#include "slp/gan/nets.hpp"
#include "slp/gan/style_model.hpp"
#include "slp/gan/trainer.hpp"

#include "slp/cluster/features.hpp"
#include "slp/cluster/kmeans.hpp"

#include "slp/match/embedder.hpp"
#include "slp/match/fusion.hpp"
#include "slp/match/train.hpp"

#include "slp/eval/minutiae.hpp"
#include "slp/eval/quality.hpp"
#include "slp/eval/roccmc.hpp"
#include "slp/eval/tsne.hpp"

#include "slp/pipeline/pipeline.hpp"
