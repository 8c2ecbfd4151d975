#include "babi_gen.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

namespace tprnn::gen {

namespace {

const std::vector<std::string> kEntities = {"mary", "john", "daniel", "sandra"};
const std::vector<std::string> kLocations = {"bathroom", "bedroom", "garden",
                                             "hallway",  "kitchen", "office"};

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

// Movement story: 10 statements, a question after every second one. The
// first two statements involve distinct entities so every sample has at
// least two story entities.
void movement_story(std::vector<std::string>& lines, int task_id,
                    std::mt19937_64& rng) {
  static const std::vector<std::string> kMoveVerbs = {
      "moved to", "went to", "journeyed to", "travelled to"};
  // Small per-task lexical variation keeps the pool tasks distinguishable.
  const std::string extra_verb =
      task_id % 2 == 0 ? std::string("walked to") : std::string("ran to");

  std::map<std::string, std::string> location;
  std::vector<std::string> placed;
  int id = 1;
  std::string first_entity;
  for (int stmt = 0; stmt < 10; ++stmt) {
    std::string who = pick(kEntities, rng);
    if (stmt == 1) {
      while (who == first_entity) who = pick(kEntities, rng);
    }
    if (stmt == 0) first_entity = who;
    const std::string& where = pick(kLocations, rng);
    std::string verb;
    std::uniform_int_distribution<int> v(0, 5);
    const int vi = v(rng);
    if (vi == 4 && location.count(who)) {
      verb = "went back to";
    } else if (vi == 5) {
      verb = extra_verb;
    } else {
      verb = kMoveVerbs[static_cast<size_t>(vi % 4)];
    }
    if (!location.count(who)) placed.push_back(who);
    location[who] = where;
    lines.push_back(std::to_string(id++) + " " + who + " " + verb + " the " +
                    where + ".");
    if (stmt % 2 == 1) {
      const std::string& asked = pick(placed, rng);
      lines.push_back(std::to_string(id++) + " Where is " + asked + "?\t" +
                      location[asked] + "\t1");
    }
  }
}

void motivation_story(std::vector<std::string>& lines, std::mt19937_64& rng) {
  static const std::vector<std::string> kPeople = {"yann", "jason", "antoine",
                                                   "sumit"};
  struct Motive {
    const char* state;
    const char* place;
    const char* object;
  };
  static const std::vector<Motive> kMotives = {
      {"hungry", "kitchen", "apple"},
      {"thirsty", "kitchen", "milk"},
      {"tired", "bedroom", "pajamas"},
      {"bored", "garden", "football"},
  };
  static const std::vector<std::string> kGoVerbs = {"went to", "went back to",
                                                    "travelled to"};
  static const std::vector<std::string> kGetVerbs = {"picked up", "grabbed",
                                                     "got"};
  const std::string& who = pick(kPeople, rng);
  const Motive& m = pick(kMotives, rng);
  int id = 1;
  lines.push_back(std::to_string(id++) + " " + who + " is " + m.state + ".");
  lines.push_back(std::to_string(id++) + " Where will " + who + " go?\t" +
                  m.place + "\t1");
  lines.push_back(std::to_string(id++) + " " + who + " " + pick(kGoVerbs, rng) +
                  " the " + m.place + ".");
  lines.push_back(std::to_string(id++) + " Why did " + who + " go to the " +
                  m.place + "?\t" + m.state + "\t1");
  lines.push_back(std::to_string(id++) + " " + who + " " + pick(kGetVerbs, rng) +
                  " the " + m.object + " there.");
  lines.push_back(std::to_string(id++) + " Why did " + who + " get the " +
                  m.object + "?\t" + m.state + "\t1");
}

int questions_per_story(int task_id) { return task_id == 20 ? 3 : 5; }

}  // namespace

std::vector<std::string> generate_task_lines(int task_id, int n_stories,
                                             std::mt19937_64& rng) {
  if (n_stories < 1) throw std::invalid_argument("need at least one story");
  std::vector<std::string> lines;
  for (int s = 0; s < n_stories; ++s) {
    if (task_id == 20) {
      motivation_story(lines, rng);
    } else {
      movement_story(lines, task_id, rng);
    }
  }
  return lines;
}

void write_split(const std::string& dir, int task_id, const std::string& split,
                 int n_questions, uint64_t seed) {
  const int per = questions_per_story(task_id);
  const int stories = (n_questions + per - 1) / per;
  std::mt19937_64 rng(seed);
  const auto lines = generate_task_lines(task_id, stories, rng);
  std::filesystem::create_directories(dir);
  const std::string path =
      dir + "/qa" + std::to_string(task_id) + "_" + split + ".txt";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& line : lines) out << line << '\n';
}

void generate_corpus(const std::string& dir, const std::vector<int>& tasks,
                     int train_questions, int valid_questions,
                     int test_questions, uint64_t seed) {
  for (int task : tasks) {
    const uint64_t base = seed * 1000003ULL + static_cast<uint64_t>(task) * 101ULL;
    write_split(dir, task, "train", train_questions, base + 1);
    write_split(dir, task, "valid", valid_questions, base + 2);
    write_split(dir, task, "test", test_questions, base + 3);
  }
}

}  // namespace tprnn::gen
