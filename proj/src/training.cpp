#include "docnade/training.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace docnade {

namespace {

template <typename Model, typename Doc, typename LossFn>
double run_epoch(Model& model, const std::vector<Doc>& docs, Optimizer& optimizer, const BatchOptions& options,
                 Rng& rng, LossFn accumulate) {
  if (docs.empty()) throw std::invalid_argument("training set is empty");
  if (options.batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  auto ps = model.params();
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
    const std::size_t end = std::min(start + options.batch_size, order.size());
    for (ParamTensor* p : ps) p->zero_grad();
    for (std::size_t k = start; k < end; ++k) total += accumulate(docs[order[k]]);
    const double scale = 1.0 / static_cast<double>(end - start);
    for (ParamTensor* p : ps) p->grad *= scale;
    optimizer.step(ps);
  }
  return total / static_cast<double>(docs.size());
}

}  // namespace

double train_epoch(DocNadeModel& model, const std::vector<Histogram>& docs, Optimizer& optimizer,
                   const BatchOptions& options, Rng& rng) {
  return run_epoch(model, docs, optimizer, options, rng,
                   [&](const Histogram& h) { return model.accumulate_gradients(sample_ordering(h, rng)); });
}

double train_epoch(DeepDocNadeModel& model, const std::vector<Histogram>& docs, Optimizer& optimizer,
                   const BatchOptions& options, Rng& rng) {
  return run_epoch(model, docs, optimizer, options, rng, [&](const Histogram& h) {
    return model.accumulate_split_gradients(draw_split(h, rng, options.split_mode));
  });
}

double train_epoch(DocNadeLmModel& model, const std::vector<Sequence>& docs, Optimizer& optimizer,
                   const BatchOptions& options, Rng& rng) {
  return run_epoch(model, docs, optimizer, options, rng,
                   [&](const Sequence& s) { return model.accumulate_gradients(s); });
}

}  // namespace docnade
