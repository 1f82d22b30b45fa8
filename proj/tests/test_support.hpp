#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "causalmem/domain.hpp"
#include "causalmem/gateway.hpp"

namespace test_support {

inline causalmem::MemoryEntry make_memory(std::string id, std::string text,
                                          causalmem::MemoryRole role,
                                          std::string provenance = "") {
  causalmem::MemoryEntry m;
  m.id = std::move(id);
  m.text = std::move(text);
  m.role = role;
  m.provenance = std::move(provenance);
  return m;
}

/// A small well-formed example used across suites: one useful memory stating
/// the answer, one distractor, one harmful correction.
inline causalmem::TaskExample make_basic_example() {
  causalmem::TaskExample e;
  e.id = "ex1";
  e.family = causalmem::TaskFamily::TemporalQA;
  e.request = "What is the adoption date?";
  e.expected_answer = "21 May 2023";
  e.criteria.expected_answer = "21 May 2023";

  causalmem::SessionRecord s;
  s.id = "sess-1";
  s.timestamp = "2023-05-14";
  s.transcript =
      "user: Any news about the cat?\n"
      "assistant: Joanna confirmed that the adoption date is 21 May 2023.";
  e.past_sessions.push_back(std::move(s));

  causalmem::MemoryEntry u1 =
      make_memory("m1", "On 14 May 2023, Joanna confirmed that the adoption date is 21 May 2023.",
                  causalmem::MemoryRole::Useful, "session_note");
  u1.scope = "sess-1";
  u1.timestamp = "2023-05-14";
  e.bank.entries.push_back(std::move(u1));
  e.bank.entries.push_back(make_memory(
      "m2", "The group debated takeout options for almost an hour.",
      causalmem::MemoryRole::Irrelevant, "conversation"));
  e.bank.entries.push_back(make_memory(
      "m3",
      "Correction about the adoption date: the adoption date is actually 28 June 2023.",
      causalmem::MemoryRole::Harmful, "synthetic_insertion"));
  return e;
}

/// Backend whose answers come from a caller-supplied function of the request.
class FakeBackend final : public causalmem::ModelBackend {
 public:
  using Fn = std::function<std::string(const causalmem::GenerationRequest&)>;

  explicit FakeBackend(Fn fn) : fn_(std::move(fn)) {}

  std::string id() const override { return "fake"; }

 protected:
  std::string do_generate(const causalmem::GenerationRequest& request) override {
    return fn_(request);
  }

 private:
  Fn fn_;
};

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto stamp =
      std::chrono::high_resolution_clock::now().time_since_epoch().count();
  auto dir = std::filesystem::temp_directory_path() /
             ("causalmem_" + tag + "_" + std::to_string(stamp) + "_" +
              std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test_support
