#ifndef JOINTKPE_TOOLS_CLI_H_
#define JOINTKPE_TOOLS_CLI_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace jointkpe::cli {

// Every setting any subcommand understands. A flat key=value config file and
// command-line flags both write into this; flags win.
struct RunConfig {
  std::string profile = "grooming";  // grooming | drugs | custom

  // paths
  std::filesystem::path corpus;
  std::filesystem::path vocab;
  std::filesystem::path model;
  std::filesystem::path embeddings;  // precomputed block store
  std::filesystem::path predictions;
  std::filesystem::path lexicon;
  std::filesystem::path out = "out";
  std::string run_name;
  bool force = false;

  // encoder / model
  std::string encoder = "toy";  // toy | precomputed
  std::size_t d = 64;
  std::size_t d_g = 0;
  int mix_window = 1;
  std::size_t k_max = 7;
  std::size_t min_freq = 1;

  // training
  std::size_t epochs = 50;
  double peak_lr = 5e-5;
  double warmup_fraction = 0.1;
  double weight_decay = 0.01;
  double grad_clip = 1.0;
  std::size_t neg_cap = 64;
  std::uint64_t seed = 0;

  // samples / extraction / evaluation
  std::size_t max_tokens = 8192;
  std::size_t block_size = 512;
  std::size_t c = 60;
  std::vector<int> k_values = {40, 50, 60};
  std::size_t folds = 5;
  std::size_t jobs = 1;
  std::string method = "jointkpe";
  std::string stopwords = "en";  // en | pt | path

  // synth
  std::size_t n_docs = 50;
  std::size_t min_words = 600;
  std::size_t max_words = 4000;

  // gradcheck
  std::size_t gc_configs = 20;
  std::size_t gc_max_d = 8;
  std::size_t gc_max_tokens = 50;
  double gc_eps = 1e-3;
  double gc_tolerance = 1e-4;
};

// Profile defaults for the keys the user did not set.
struct ProfileDefaults {
  std::size_t epochs;
  std::vector<int> k_values;
  std::size_t c;
  std::size_t max_tokens;
};
ProfileDefaults profile_defaults(const std::string& profile);

// Parses argv, runs the subcommand and returns the process exit code:
// 0 ok, 2 config error, 3 data error, 4 numeric failure.
int run(int argc, const char* const* argv);

}  // namespace jointkpe::cli

#endif  // JOINTKPE_TOOLS_CLI_H_
