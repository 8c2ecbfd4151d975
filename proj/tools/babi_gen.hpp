#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace tprnn::gen {

/// Synthetic story generators in bAbI v1.2 line format, used where no
/// dataset download is available (tests, acceptance runs, demos).
///
/// Task 1 produces entity-movement stories with interleaved
/// "where is X ?" questions whose answer is the entity's latest location.
/// Task 20 produces motivation stories with a fixed state -> location ->
/// object mapping and "where will X go ?" / "why did X ..." questions.
/// Any other task id in the augmentation pool reuses the movement grammar
/// with per-task verb variation; those splits exist to drive the
/// augmentation and joint-training machinery at full scale.
std::vector<std::string> generate_task_lines(int task_id, int n_stories,
                                             std::mt19937_64& rng);

/// Writes dir/qa{task}_{split}.txt with roughly n_questions questions.
void write_split(const std::string& dir, int task_id, const std::string& split,
                 int n_questions, uint64_t seed);

/// Standard train/valid/test layout for the given tasks.
void generate_corpus(const std::string& dir, const std::vector<int>& tasks,
                     int train_questions, int valid_questions,
                     int test_questions, uint64_t seed);

}  // namespace tprnn::gen
