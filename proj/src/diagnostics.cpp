#include "ranl/diagnostics.hpp"

#include "ranl/rng.hpp"
#include "ranl/train.hpp"

namespace ranl {

ModelConfig tiny_config() {
  ModelConfig c;
  c.feature_dim = 4;
  c.embed_dim = 4;
  c.hidden = 3;
  c.frames = 3;
  c.answer_classes = 3;
  c.vocab_size = 8;
  c.reasoning_steps = 2;
  c.max_decode_len = 3;
  return c;
}

ModelConfig small_config() {
  ModelConfig c;
  c.feature_dim = 6;
  c.embed_dim = 5;
  c.hidden = 4;
  c.frames = 5;
  c.answer_classes = 4;
  c.vocab_size = 12;
  c.reasoning_steps = 3;
  c.max_decode_len = 3;
  return c;
}

VideoInstance random_instance(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t words = config.vocab_size - kReservedTokens;
  auto word = [&] { return kReservedTokens + static_cast<TokenId>(rng.below(words)); };

  VideoInstance v;
  v.video_id = "random-" + std::to_string(seed);
  v.features = Tensor(Shape::matrix(config.frames, config.feature_dim));
  for (double& x : v.features.values()) x = rng.normal();
  v.attributes.resize(config.frames);
  for (std::size_t i = 1; i < config.frames; ++i) {
    const std::size_t k = 1 + rng.below(2);
    for (std::size_t j = 0; j < k; ++j) v.attributes[i].push_back(word());
  }
  QaPair qa;
  qa.question = {word(), word(), word()};
  qa.answer = {word(), word()};
  qa.answer_class = rng.below(config.answer_classes);
  for (ClassId c = 0; c < config.answer_classes; ++c) qa.candidates.push_back(c);
  v.qa.push_back(std::move(qa));
  return v;
}

GradCheckReport check_model_gradients(const ModelConfig& config, Task task, std::uint64_t seed, double eps,
                                      double tol, double lambda) {
  Model model = Model::create(config, seed);
  const VideoInstance instance = random_instance(config, seed + 1);
  const ExampleView example = instance.example(0);
  std::vector<Tensor*> params = model.params.tensors();
  return grad_check_params(
      [&](Tape& tape) {
        Net net(model.config, model.params, tape);
        return objective(task_loss(net, example, task), net.parameter_vars(), lambda);
      },
      params, eps, tol);
}

}  // namespace ranl
