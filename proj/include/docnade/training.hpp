#pragma once

#include <vector>

#include "docnade/corpus.hpp"
#include "docnade/deep_docnade.hpp"
#include "docnade/docnade.hpp"
#include "docnade/docnade_lm.hpp"
#include "docnade/nn_core.hpp"

namespace docnade {

/// Mini-batch settings. Gradients are summed over the documents of a batch,
/// divided by the batch size, and applied in one optimizer step.
struct BatchOptions {
  std::size_t batch_size = 64;
  SplitMode split_mode = SplitMode::histogram;  // DeepDocNADE only
};

/// One pass over `docs` in a freshly shuffled order. DocNADE draws a new
/// uniformly random ordering of every bag each epoch. Returns the mean
/// per-document training loss.
double train_epoch(DocNadeModel& model, const std::vector<Histogram>& docs, Optimizer& optimizer,
                   const BatchOptions& options, Rng& rng);
double train_epoch(DeepDocNadeModel& model, const std::vector<Histogram>& docs, Optimizer& optimizer,
                   const BatchOptions& options, Rng& rng);
double train_epoch(DocNadeLmModel& model, const std::vector<Sequence>& docs, Optimizer& optimizer,
                   const BatchOptions& options, Rng& rng);

}  // namespace docnade
