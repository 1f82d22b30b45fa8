#include <catch2/catch_amalgamated.hpp>

#include "causalmem/baselines.hpp"
#include "causalmem/dataset.hpp"
#include "test_support.hpp"

using namespace causalmem;
using test_support::make_basic_example;
using test_support::make_memory;

TEST_CASE("agent names round-trip") {
  for (const auto kind : all_agents()) {
    CHECK(parse_agent(agent_name(kind)) == kind);
  }
  CHECK_FALSE(parse_agent("psychic_memory").has_value());
}

TEST_CASE("no_memory agent selects and exposes nothing") {
  const auto r = no_memory_agent(make_basic_example());
  CHECK(r.selected_ids.empty());
  CHECK(r.exposed_ids.empty());
  CHECK(r.context_payload.empty());
  CHECK(r.prompt == PromptKind::NoContext);
}

TEST_CASE("full_history agent concatenates transcripts chronologically") {
  auto e = make_basic_example();
  SessionRecord later;
  later.id = "sess-2";
  later.timestamp = "2023-06-01";
  later.transcript = "user: ping\nassistant: pong";
  e.past_sessions.insert(e.past_sessions.begin(), later);  // stored out of order

  const auto r = full_history_agent(e);
  CHECK(r.prompt == PromptKind::PastSessions);
  const auto first = r.context_payload.find("sess-1");
  const auto second = r.context_payload.find("sess-2");
  REQUIRE(first != std::string::npos);
  REQUIRE(second != std::string::npos);
  CHECK(first < second);  // 2023-05-14 session renders before 2023-06-01
  CHECK(r.context_payload.find("2023-06-01") != std::string::npos);

  // Bookkeeping: the whole bank counts as exposed.
  CHECK(r.exposed_ids == std::vector<std::string>{"m1", "m2", "m3"});
  CHECK(r.selected_ids == r.exposed_ids);
}

TEST_CASE("full_history agent degrades to no-context without sessions") {
  auto e = make_basic_example();
  e.past_sessions.clear();
  e.bank.entries[0].scope.reset();  // keep the example self-consistent
  const auto r = full_history_agent(e);
  CHECK(r.prompt == PromptKind::NoContext);
  CHECK(r.flags == std::vector<std::string>{"no_past_sessions"});
  CHECK(r.exposed_ids.size() == 3);
}

TEST_CASE("summary agent exposes the full bank through one synthetic memory") {
  OracleBackend oracle;
  const auto e = make_basic_example();
  const auto r = summary_memory_agent(e, oracle);
  CHECK(r.exposed_ids == std::vector<std::string>{"m1", "m2", "m3"});
  CHECK(r.selected_ids.empty());  // the synthetic memory is not a bank member
  CHECK(r.prompt == PromptKind::MemoryContext);
  // One rendered line holding the concatenated summary.
  CHECK(r.context_payload.rfind("- ", 0) == 0);
  CHECK(r.context_payload.find("adoption date is 21 May 2023") != std::string::npos);

  auto empty = e;
  empty.bank.entries.clear();
  const auto guard = summary_memory_agent(empty, oracle);
  CHECK(guard.prompt == PromptKind::NoContext);
  CHECK(guard.flags == std::vector<std::string>{"empty_bank"});
}

TEST_CASE("graph agent activates on shared tokens and the scope bonus") {
  SECTION("more shared tokens rank first") {
    TaskExample e;
    e.id = "g1";
    e.request = "What is the pottery class schedule?";
    e.expected_answer = "x";
    e.criteria.must_include = {"x"};
    e.bank.entries.push_back(
        make_memory("m1", "pottery class schedule posted", MemoryRole::Irrelevant));
    e.bank.entries.push_back(make_memory("m2", "pottery wheel broke", MemoryRole::Irrelevant));
    e.bank.entries.push_back(make_memory("m3", "garden fence paint", MemoryRole::Irrelevant));
    const auto r = graph_memory_agent(e, 2);
    CHECK(r.selected_ids == std::vector<std::string>{"m1", "m2"});
  }
  SECTION("a session date named in the query flips an otherwise tied ranking") {
    TaskExample e;
    e.id = "g2";
    e.request = "What was planned on 14 May 2023 for the picnic?";
    e.expected_answer = "x";
    e.criteria.must_include = {"x"};
    SessionRecord s;
    s.id = "sess-1";
    s.timestamp = "2023-05-14";
    s.transcript = "user: hi";
    e.past_sessions.push_back(s);
    // Both memories share exactly one non-stopword token with the query.
    auto tied_a = make_memory("a1", "picnic supplies pending", MemoryRole::Irrelevant);
    auto tied_b = make_memory("b1", "picnic invitations sent", MemoryRole::Irrelevant);
    tied_b.timestamp = "2023-05-14";  // matches the date named in the query
    e.bank.entries.push_back(tied_a);
    e.bank.entries.push_back(tied_b);
    const auto with_bonus = graph_memory_agent(e, 1);
    CHECK(with_bonus.selected_ids == std::vector<std::string>{"b1"});

    // Without the date match the tie resolves by id ascending.
    e.bank.entries[1].timestamp.reset();
    const auto without_bonus = graph_memory_agent(e, 1);
    CHECK(without_bonus.selected_ids == std::vector<std::string>{"a1"});
  }
  SECTION("k larger than the bank selects everything") {
    const auto r = graph_memory_agent(make_basic_example(), 10);
    CHECK(r.selected_ids.size() == 3);
  }
}

TEST_CASE("reflection agent frames memories by role and retrieves by keywords") {
  SECTION("role templates") {
    CHECK(reflect_memory(make_memory("u", "Joanna adopted a cat in May 2023",
                                     MemoryRole::Useful))
              .rfind("Lesson: ", 0) == 0);
    const auto caution =
        reflect_memory(make_memory("h", "the date is actually wrong", MemoryRole::Harmful));
    CHECK(caution.rfind("Caution: a past record claims ", 0) == 0);
    CHECK(caution.find("; verify before trusting.") != std::string::npos);
    CHECK(reflect_memory(make_memory("i", "weather note", MemoryRole::Irrelevant))
              .rfind("Note: ", 0) == 0);
  }
  SECTION("keyword matching still surfaces a harmful reflection, framed") {
    // The harmful text shares the most distinct query tokens.
    TaskExample e;
    e.id = "r1";
    e.request = "What is the adoption date for the shelter kitten?";
    e.expected_answer = "21 May 2023";
    e.criteria.expected_answer = "21 May 2023";
    e.bank.entries.push_back(make_memory(
        "m1", "the adoption date is 21 May 2023", MemoryRole::Useful, "session_note"));
    e.bank.entries.push_back(make_memory(
        "m2",
        "Correction for the shelter kitten adoption date: the adoption date is actually "
        "28 June 2023.",
        MemoryRole::Harmful, "synthetic_insertion"));
    const auto r = reflection_memory_agent(e, 1);
    REQUIRE(r.selected_ids == std::vector<std::string>{"m2"});
    CHECK(r.context_payload.find("Caution: a past record claims") != std::string::npos);
    // The raw text appears only inside the caution frame.
    const auto raw_pos = r.context_payload.find("Correction for the shelter kitten");
    const auto frame_pos = r.context_payload.find("Caution:");
    REQUIRE(raw_pos != std::string::npos);
    CHECK(frame_pos < raw_pos);
  }
  SECTION("context carries reflections, not raw memory texts") {
    const auto e = make_basic_example();
    const auto r = reflection_memory_agent(e, 3);
    CHECK(r.selected_ids.size() == 3);
    CHECK(r.context_payload.find("- Lesson: ") != std::string::npos);
    CHECK(r.context_payload.find("- Note: ") != std::string::npos);
  }
}

TEST_CASE("baseline selections are deterministic and bounded by min(k, bank)") {
  const auto examples = generate_fixture(4, 10, 0.5);
  HashedEmbedder embedder;
  for (const auto& e : examples) {
    const auto v1 = vector_memory_agent(e, 3, embedder);
    const auto v2 = vector_memory_agent(e, 3, embedder);
    CHECK(v1.selected_ids == v2.selected_ids);
    const auto expected = std::min<std::size_t>(3, e.bank.entries.size());
    CHECK(v1.selected_ids.size() == expected);
    CHECK(graph_memory_agent(e, 3).selected_ids.size() == expected);
    CHECK(reflection_memory_agent(e, 3).selected_ids.size() == expected);
  }
}
