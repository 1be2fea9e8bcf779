#include <random>
#include <set>

#include <gtest/gtest.h>

#include "metakg/error.hpp"
#include "metakg/filter.hpp"
#include "metakg/mock_backend.hpp"
#include "test_util.hpp"

using namespace metakg;
using testutil::TempDir;

namespace {

Candidate cand(std::string id, std::uint64_t comments = 200) {
    Candidate c;
    c.item_id = std::move(id);
    c.comment_count = comments;
    c.intro = "INTRO<" + c.item_id + ">";
    c.asr = "speech";
    c.comments = {"so deep", "the cage is society"};
    return c;
}

std::vector<Candidate> cands(std::size_t n) {
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(cand("c" + std::to_string(i)));
    return out;
}

std::set<std::string> ids(const std::vector<Candidate>& cs) {
    std::set<std::string> out;
    for (const auto& c : cs) out.insert(c.item_id);
    return out;
}

ScriptedBackend constant(std::string reply) {
    return ScriptedBackend([reply](const ChatRequest&) -> ChatReply { return {std::nullopt, reply}; });
}

/// Accepts exactly the ids in `accept`; the id is read back from the intro.
ScriptedBackend by_script(std::set<std::string> accept) {
    return ScriptedBackend([accept](const ChatRequest& r) -> ChatReply {
        auto a = r.user.find("INTRO<");
        auto b = r.user.find('>', a);
        const std::string id = r.user.substr(a + 6, b - a - 6);
        nlohmann::json j = {{"verdict", accept.count(id) ? "yes" : "no"}, {"rationale", "because " + id}};
        return {std::nullopt, "Here is my answer: " + j.dump()};
    });
}

ClassifierConfig parallel_cfg() {
    ClassifierConfig cfg;
    cfg.max_parallel = 4;
    cfg.retry = {2, std::chrono::milliseconds(0)};
    return cfg;
}

}  // namespace

TEST(CommentFilter, StrictThreshold) {
    std::vector<Candidate> in{cand("a", 150), cand("b", 151), cand("c", 0)};
    auto out = stage_comment_filter(in, 150);
    EXPECT_EQ(ids(out.kept), (std::set<std::string>{"b"}));
    EXPECT_EQ(ids(out.rejected), (std::set<std::string>{"a", "c"}));
    EXPECT_EQ(out.rejected[0].stage_trace.back().rationale, "150 <= 150 comments");
    EXPECT_EQ(out.kept[0].stage_trace.back().stage, "comment");
    EXPECT_EQ(kDefaultCommentThreshold, 150u);
}

TEST(CommentFilter, ThousandCandidatesCountingOracle) {
    std::vector<Candidate> in;
    for (std::uint64_t i = 0; i < 1000; ++i) in.push_back(cand("c" + std::to_string(i), i));
    std::size_t expected = 0;
    for (const auto& c : in) expected += c.comment_count > 150 ? 1 : 0;
    auto out = stage_comment_filter(in);
    EXPECT_EQ(out.kept.size(), expected);
    EXPECT_EQ(out.kept.size(), 849u);
}

TEST(ClassifierReply, Parsing) {
    auto d = parse_classifier_reply(R"({"verdict": "yes", "rationale": "a cage for freedom"})");
    ASSERT_TRUE(d);
    EXPECT_TRUE(d->accept);
    EXPECT_EQ(d->rationale, "a cage for freedom");
    d = parse_classifier_reply("Sure.\n```json\n{\"verdict\": false}\n```");
    ASSERT_TRUE(d);
    EXPECT_FALSE(d->accept);
    d = parse_classifier_reply("No. It is a cooking tutorial.");
    ASSERT_TRUE(d);
    EXPECT_FALSE(d->accept);
    EXPECT_EQ(d->rationale, "It is a cooking tutorial.");
    EXPECT_TRUE(parse_classifier_reply("**Yes**")->accept);
    EXPECT_FALSE(parse_classifier_reply("Maybe, hard to say"));
    EXPECT_FALSE(parse_classifier_reply(R"({"verdict": "perhaps"})"));
    EXPECT_FALSE(parse_classifier_reply(""));
}

TEST(LlmFilter, AlwaysYesKeepsEverything) {
    auto backend = constant(R"({"verdict": "yes", "rationale": "ok"})");
    auto out = stage_llm_filter(cands(12), backend, TemplateSet::defaults(), parallel_cfg());
    EXPECT_EQ(out.kept.size(), 12u);
    for (std::size_t i = 0; i < out.kept.size(); ++i) EXPECT_EQ(out.kept[i].item_id, "c" + std::to_string(i));
}

TEST(LlmFilter, AlwaysNoRejectsAtLlmStage) {
    auto backend = constant("no");
    auto out = stage_llm_filter(cands(7), backend, TemplateSet::defaults(), parallel_cfg());
    EXPECT_TRUE(out.kept.empty());
    ASSERT_EQ(out.rejected.size(), 7u);
    for (const auto& c : out.rejected) {
        EXPECT_EQ(c.stage_trace.back().stage, "llm");
        EXPECT_EQ(c.stage_trace.back().verdict, StageVerdict::rejected);
    }
}

TEST(LlmFilter, ScriptedTwentyCandidates) {
    std::set<std::string> accept{"c1", "c2", "c3", "c5", "c8", "c13"};
    auto backend = by_script(accept);
    auto out = stage_llm_filter(cands(20), backend, TemplateSet::defaults(), parallel_cfg());
    EXPECT_EQ(ids(out.kept), accept);
    EXPECT_EQ(out.rejected.size(), 14u);
    EXPECT_EQ(out.kept[0].stage_trace.back().rationale, "because c1");
}

TEST(LlmFilter, PromptCarriesIntroAsrAndComments) {
    std::string seen;
    ScriptedBackend b([&](const ChatRequest& r) -> ChatReply {
        seen = r.user;
        return {std::nullopt, "yes"};
    });
    stage_llm_filter({cand("x")}, b, TemplateSet::defaults());
    EXPECT_NE(seen.find("INTRO<x>"), std::string::npos);
    EXPECT_NE(seen.find("speech"), std::string::npos);
    EXPECT_NE(seen.find("- so deep\n- the cage is society"), std::string::npos);
}

TEST(LlmFilter, UnparseableAndTransportGoToReview) {
    auto vague = constant("It is hard to say.");
    auto out = stage_llm_filter(cands(3), vague, TemplateSet::defaults(), parallel_cfg());
    EXPECT_EQ(out.needs_review.size(), 3u);
    EXPECT_EQ(vague.calls(), 6u);  // one repair each

    int n = 0;
    ScriptedBackend repaired([&](const ChatRequest& r) -> ChatReply {
        ++n;
        return {std::nullopt, r.user.find("could not be read") != std::string::npos ? "yes" : "hmm"};
    });
    EXPECT_EQ(stage_llm_filter(cands(1), repaired, TemplateSet::defaults()).kept.size(), 1u);
    EXPECT_EQ(n, 2);

    ScriptedBackend down([](const ChatRequest&) -> ChatReply { throw BackendError("timeout", true); });
    out = stage_llm_filter(cands(2), down, TemplateSet::defaults(), parallel_cfg());
    EXPECT_EQ(out.needs_review.size(), 2u);
    EXPECT_NE(out.needs_review[0].stage_trace.back().rationale.find("timeout"), std::string::npos);
}

TEST(MllmVerify, FramesAndPriorRationale) {
    TempDir dir;
    auto c = cand("v");
    c.frame_paths = testutil::write_frames(dir / "v", 20);
    c.stage_trace.push_back({"llm", StageVerdict::kept, "PRIOR-ANALYSIS"});
    std::size_t images = 0;
    std::string user;
    ScriptedBackend b([&](const ChatRequest& r) -> ChatReply {
        images = r.images.size();
        user = r.user;
        return {std::nullopt, R"({"verdict": "yes", "rationale": "frames agree"})"};
    });
    ClassifierConfig cfg;
    cfg.max_frames = 8;
    auto out = stage_mllm_verify({c}, b, TemplateSet::defaults(), cfg);
    ASSERT_EQ(out.kept.size(), 1u);
    EXPECT_EQ(images, 8u);
    EXPECT_NE(user.find("PRIOR-ANALYSIS"), std::string::npos);
    EXPECT_EQ(out.kept[0].stage_trace.size(), 2u);
    EXPECT_EQ(out.kept[0].stage_trace.back().stage, "mllm");
}

TEST(MllmVerify, MirrorsClassifierExamples) {
    TempDir dir;
    auto in = cands(20);
    for (auto& c : in) c.frame_paths = testutil::write_frames(dir / c.item_id, 3);
    auto yes = constant("yes");
    EXPECT_EQ(stage_mllm_verify(in, yes, TemplateSet::defaults(), parallel_cfg()).kept.size(), 20u);
    auto no = constant("no");
    EXPECT_EQ(stage_mllm_verify(in, no, TemplateSet::defaults(), parallel_cfg()).rejected.size(), 20u);
    std::set<std::string> accept{"c0", "c4", "c19"};
    auto scripted = by_script(accept);
    EXPECT_EQ(ids(stage_mllm_verify(in, scripted, TemplateSet::defaults(), parallel_cfg()).kept), accept);
}

TEST(MllmVerify, MissingFramesNeedReview) {
    auto yes = constant("yes");
    auto out = stage_mllm_verify(cands(2), yes, TemplateSet::defaults());
    EXPECT_EQ(out.needs_review.size(), 2u);
    EXPECT_EQ(yes.calls(), 0u);
}

TEST(HumanVeto, UnanimityRule) {
    VoteTable votes{{"a", {true, true, true}}, {"b", {true, true, false}}, {"c", {false, false, false}}};
    std::vector<Candidate> in{cand("a"), cand("b"), cand("c")};
    auto out = stage_human_veto(in, votes);
    EXPECT_EQ(ids(out.kept), (std::set<std::string>{"a"}));
    EXPECT_EQ(out.rejected[0].stage_trace.back().rationale, "2/3 annotators accept");
    VoteTable short_votes{{"a", {true, true}}};
    EXPECT_THROW(stage_human_veto({cand("a")}, short_votes), InputError);
    EXPECT_THROW(stage_human_veto({cand("zz")}, votes), InputError);
}

TEST(HumanVeto, FoldOracleOverSyntheticVotes) {
    // 4000 candidates; 860 receive three accepts, the rest at least one dissent.
    std::mt19937_64 rng(860);
    std::vector<Candidate> in;
    VoteTable votes;
    std::vector<std::size_t> order(4000);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::set<std::size_t> unanimous(order.begin(), order.begin() + 860);
    std::uniform_int_distribution<int> pattern(0, 6);
    for (std::size_t i = 0; i < 4000; ++i) {
        const std::string id = "v" + std::to_string(i);
        in.push_back(cand(id));
        if (unanimous.count(i)) {
            votes[id] = {true, true, true};
        } else {
            const int p = pattern(rng);  // 0..6 -> any non-all-true 3-bit pattern
            votes[id] = {(p & 1) != 0, (p & 2) != 0, (p & 4) != 0};
        }
    }
    std::size_t oracle = 0;
    for (const auto& [id, v] : votes) oracle += (v[0] && v[1] && v[2]) ? 1 : 0;
    auto out = stage_human_veto(in, votes);
    EXPECT_EQ(out.kept.size(), oracle);
    EXPECT_EQ(out.kept.size(), 860u);
}

TEST(Votes, LoadFile) {
    TempDir dir;
    testutil::write_file(dir / "v.json", R"({"a": [true, true, true], "b": [true, false, true]})");
    auto v = load_votes(dir / "v.json");
    EXPECT_EQ(v.at("b"), (std::vector<bool>{true, false, true}));
    testutil::write_file(dir / "bad.json", "[1,2]");
    EXPECT_THROW(load_votes(dir / "bad.json"), InputError);
}

TEST(Candidates, JsonRoundTripAndLoad) {
    TempDir dir;
    auto c = cand("a");
    c.metaphor_type = MetaphorType::analogical_montage;
    c.stage_trace.push_back({"comment", StageVerdict::kept, "200 > 150 comments"});
    c.frame_paths = {dir / "a" / "0.png"};
    nlohmann::json j = c;
    auto back = j.get<Candidate>();
    EXPECT_EQ(nlohmann::json(back), j);
    testutil::write_file(dir / "c.jsonl", j.dump() + "\n\n" +
                                              nlohmann::json{{"item_id", "b"}, {"comment_count", 3}, {"frames", {"b/1.png"}}}.dump() + "\n");
    auto loaded = load_candidates(dir / "c.jsonl");
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded[1].frame_paths[0], dir.path() / "b/1.png");
    testutil::write_file(dir / "dup.jsonl", j.dump() + "\n" + j.dump() + "\n");
    EXPECT_THROW(load_candidates(dir / "dup.jsonl"), InputError);
}

TEST(Funnel, StageValidation) {
    FunnelStages s;
    s.order = {"comment", "bogus"};
    EXPECT_THROW(validate_stages(s), InputError);
    s.order = {"comment", "comment"};
    EXPECT_THROW(validate_stages(s), InputError);
    s.order = {"llm"};
    EXPECT_THROW(validate_stages(s), InputError);
    s.order = {"human"};
    EXPECT_THROW(validate_stages(s), InputError);
    s.order = {"comment"};
    EXPECT_NO_THROW(validate_stages(s));
}

TEST(Funnel, FullRunConservesEveryCandidate) {
    TempDir dir;
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::uint64_t> comments(0, 400);
    std::vector<Candidate> in;
    for (int i = 0; i < 60; ++i) {
        auto c = cand("f" + std::to_string(i), comments(rng));
        if (i % 11 != 0) c.frame_paths = testutil::write_frames(dir / c.item_id, 2);
        c.metaphor_type = kAllMetaphorTypes[static_cast<std::size_t>(i) % 8];
        in.push_back(c);
    }
    auto llm = ScriptedBackend([](const ChatRequest& r) -> ChatReply {
        if (r.user.find("f7>") != std::string::npos) return {std::nullopt, "unclear"};
        return {std::nullopt, r.user.size() % 3 == 0 ? "no" : "yes, a metaphor"};
    });
    auto mllm = constant(R"({"verdict": "yes", "rationale": "consistent"})");
    VoteTable votes;
    for (const auto& c : in) votes[c.item_id] = {true, c.comment_count % 2 == 0, true};

    FunnelStages s;
    s.order = {"comment", "llm", "mllm", "human"};
    s.classifier = &llm;
    s.verifier = &mllm;
    s.votes = &votes;
    s.classifier_cfg = parallel_cfg();
    auto r = run_funnel(in, s, TemplateSet::defaults());
    EXPECT_EQ(r.survivors.size() + r.rejected.size() + r.needs_review.size(), in.size());
    ASSERT_EQ(r.reports.size(), 4u);
    for (std::size_t k = 1; k < r.reports.size(); ++k) EXPECT_EQ(r.reports[k].in, r.reports[k - 1].kept);
    for (const auto& c : r.survivors) {
        EXPECT_EQ(c.stage_trace.size(), 4u);
        EXPECT_TRUE(votes[c.item_id][1]);
    }
    for (const auto& c : r.rejected) {
        // Nothing after the rejecting stage.
        EXPECT_EQ(c.stage_trace.back().verdict, StageVerdict::rejected);
        for (std::size_t k = 0; k + 1 < c.stage_trace.size(); ++k) EXPECT_EQ(c.stage_trace[k].verdict, StageVerdict::kept);
    }
    auto j = to_json(r);
    EXPECT_EQ(j["stages"].size(), 4u);
    EXPECT_EQ(j["survivors"], r.survivors.size());
}

TEST(Funnel, StageOutputsAreSubsetsOverRandomFixtures) {
    std::mt19937_64 rng(100);
    for (int round = 0; round < 100; ++round) {
        std::uniform_int_distribution<std::size_t> size(0, 40);
        std::uniform_int_distribution<std::uint64_t> comments(100, 200);
        std::vector<Candidate> in;
        const std::size_t n = size(rng);
        for (std::size_t i = 0; i < n; ++i) in.push_back(cand("r" + std::to_string(i), comments(rng)));
        const std::uint64_t salt = rng();
        auto llm = ScriptedBackend([salt](const ChatRequest& r) -> ChatReply {
            const auto h = std::hash<std::string>{}(r.user) ^ salt;
            return {std::nullopt, h % 5 == 0 ? "unsure" : (h % 2 ? "yes" : "no")};
        });
        VoteTable votes;
        std::bernoulli_distribution coin(0.8);
        for (const auto& c : in) votes[c.item_id] = {coin(rng), coin(rng), coin(rng)};

        auto after_comment = stage_comment_filter(in, 150);
        auto after_llm = stage_llm_filter(after_comment.kept, llm, TemplateSet::defaults());
        auto after_human = stage_human_veto(after_llm.kept, votes);
        const auto all = ids(in);
        const auto a = ids(after_comment.kept);
        EXPECT_TRUE(std::includes(all.begin(), all.end(), a.begin(), a.end()));
        const auto b = ids(after_llm.kept);
        const auto c = ids(after_human.kept);
        EXPECT_TRUE(std::includes(a.begin(), a.end(), b.begin(), b.end()));
        EXPECT_TRUE(std::includes(b.begin(), b.end(), c.begin(), c.end()));
        EXPECT_EQ(after_llm.kept.size() + after_llm.rejected.size() + after_llm.needs_review.size(), after_comment.kept.size());
    }
}

TEST(Funnel, PublishedFunnelCountsFitReportFormat) {
    std::vector<StageReport> reports{{"comment", 70000, 16000, 54000, 0},
                                     {"llm", 16000, 4000, 12000, 0},
                                     {"mllm", 4000, 1500, 2500, 0},
                                     {"human", 1500, 860, 640, 0}};
    for (const auto& r : reports) {
        nlohmann::json j = r;
        auto back = j.get<StageReport>();
        EXPECT_EQ(back.in, r.in);
        EXPECT_EQ(back.kept, r.kept);
        EXPECT_EQ(j["stage"], r.stage);
        EXPECT_EQ(back.kept + back.rejected + back.needs_review, back.in);
    }
    EXPECT_EQ(reports.back().kept, 860u);
}

TEST(Funnel, BalanceWarningsForSkewedSurvivors) {
    std::vector<Candidate> in;
    for (int i = 0; i < 40; ++i) {
        auto c = cand("s" + std::to_string(i));
        c.metaphor_type = i < 30 ? MetaphorType::body_language : kAllMetaphorTypes[1 + i % 7];
        in.push_back(c);
    }
    FunnelStages s;
    s.order = {"comment"};
    auto r = run_funnel(in, s, TemplateSet::defaults());
    EXPECT_FALSE(r.warnings.empty());
}
