// Writes a synthetic corpus for trying the pipeline end to end:
//   <dir>/raw.jsonl        unlabeled tweets (plus some the labeler rejects)
//   <dir>/test.jsonl       labeled held-out tweets
//   <dir>/embeddings.txt   random vectors for part of the vocabulary

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "emoquad/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic tweet corpus", "emoquad-synth"};
  std::string dir;
  emoquad::synthetic::PipelineSpec spec;
  app.add_option("--dir", dir, "Output directory")->required();
  app.add_option("--train-per-class", spec.train_per_class, "Training tweets per class");
  app.add_option("--test-per-class", spec.test_per_class, "Test tweets per class");
  app.add_option("--rejects", spec.rejects, "Extra raw tweets the labeler should reject");
  app.add_option("--dim", spec.dim, "Embedding dimension");
  app.add_option("--noise", spec.noise_rate, "Share of noise words");
  app.add_option("--seed", spec.seed, "Random seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto files = emoquad::synthetic::write_pipeline_files(dir, spec);
    std::cerr << "wrote " << files.raw_count << " raw, " << files.test_count << " test tweets to " << dir << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
