#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "babi_gen.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic bAbI-format story generator"};
  std::string out_dir;
  std::vector<int> tasks = {1, 6, 7, 8, 9, 11, 12, 13, 20};
  int train_q = 9000, valid_q = 1000, test_q = 1000;
  uint64_t seed = 1;
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--tasks", tasks, "Task ids to generate");
  app.add_option("--train", train_q, "Training questions per task");
  app.add_option("--valid", valid_q, "Validation questions per task");
  app.add_option("--test", test_q, "Test questions per task");
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    tprnn::gen::generate_corpus(out_dir, tasks, train_q, valid_q, test_q, seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::printf("wrote %zu task(s) to %s\n", tasks.size(), out_dir.c_str());
  return 0;
}
