#pragma once

#include "stylemix/error.hpp"

#include "stylemix/core/matrix.hpp"
#include "stylemix/core/parallel.hpp"
#include "stylemix/core/rng.hpp"
#include "stylemix/core/sampling.hpp"
#include "stylemix/core/similarity.hpp"

#include "stylemix/corpus/dataset.hpp"
#include "stylemix/corpus/grammar.hpp"
#include "stylemix/corpus/lexicon.hpp"
#include "stylemix/corpus/profile.hpp"

#include "stylemix/lm/inference.hpp"
#include "stylemix/lm/model.hpp"
#include "stylemix/lm/tokenizer.hpp"
#include "stylemix/lm/training.hpp"
#include "stylemix/lm/transformer.hpp"

#include "stylemix/metrics/scores.hpp"
#include "stylemix/metrics/style_embedding.hpp"

#include "stylemix/mixing/mixing.hpp"
#include "stylemix/selection/selection.hpp"

#include "stylemix/optim/es.hpp"
#include "stylemix/optim/grpo.hpp"
#include "stylemix/optim/reward.hpp"

#include "stylemix/io/base64.hpp"
#include "stylemix/io/csv.hpp"
#include "stylemix/io/json_io.hpp"

#include "stylemix/experiment/config.hpp"
#include "stylemix/experiment/pipeline.hpp"
#include "stylemix/experiment/report.hpp"
#include "stylemix/experiment/store.hpp"
