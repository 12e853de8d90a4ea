// ulo-make-digits: deterministic synthetic digit corpus in MNIST IDX layout.

#include <cstdio>
#include <filesystem>

#include <CLI11.hpp>

#include "ulo/digits.hpp"
#include "ulo/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic 28x28 digit corpus (IDX files)"};
  std::string out_dir = "digits";
  ulo::DigitCorpusConfig cfg;
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--train-count", cfg.train_count, "training images")
      ->check(CLI::PositiveNumber);
  app.add_option("--test-count", cfg.test_count, "test images")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "corpus seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::filesystem::create_directories(out_dir);
    ulo::generate_digit_corpus(out_dir, cfg);
    std::printf("wrote %lld train / %lld test images to %s\n",
                static_cast<long long>(cfg.train_count),
                static_cast<long long>(cfg.test_count), out_dir.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
