#include <benchmark/benchmark.h>

#include <random>

#include "ryno/campaign.hpp"
#include "ryno/corpus.hpp"
#include "ryno/prompts.hpp"
#include "ryno/stats.hpp"

using namespace ryno;

namespace {

std::vector<double> likert_means(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> d(15, 75);  // sums of 15 five-point items
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng) / 15.0;
    return v;
}

const CampaignSpec& campaign() {
    static const auto c = load_campaign_file(std::string(RYNO_BENCH_DATA) + "/campaign/default_campaign.json");
    return c;
}

const WorldCorpus& corpus() {
    static const auto c = load_corpus_file(std::string(RYNO_BENCH_DATA) + "/corpus/world.json");
    return c;
}

}  // namespace

static void BM_Spearman(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto x = likert_means(n, 1), y = likert_means(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(stats::spearman(x, y));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Spearman)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oNLogN);

static void BM_ExactPermutationP(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto x = likert_means(n, 3), y = likert_means(n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(stats::exact_permutation_p(x, y));
}
BENCHMARK(BM_ExactPermutationP)->DenseRange(4, 8);

static void BM_SelectStoryContext(benchmark::State& state) {
    const auto& level = campaign().level(2);
    for (auto _ : state) benchmark::DoNotOptimize(select_story_context(corpus(), level.context_tags, 600));
}
BENCHMARK(BM_SelectStoryContext);

static void BM_BuildDialoguePrompt(benchmark::State& state) {
    const auto& level = campaign().level(2);
    auto story = select_story_context(corpus(), level.context_tags, 600);
    std::vector<HistoryEntry> history;
    for (int i = 0; i < state.range(0); ++i)
        history.push_back({i % 2 ? Speaker::Npc : Speaker::Player,
                           "a line of conversation about the red sky and the flooded harbor, number " +
                               std::to_string(i),
                           i});
    for (auto _ : state)
        benchmark::DoNotOptimize(prompts::build_dialogue_prompt(level, history, story, "What happened next?", 3000));
}
BENCHMARK(BM_BuildDialoguePrompt)->Arg(10)->Arg(100)->Arg(1000);

static void BM_TriggerPrompt(benchmark::State& state) {
    const auto& trigger = campaign().level(1).trigger;
    for (auto _ : state)
        benchmark::DoNotOptimize(prompts::build_trigger_prompt(trigger, "Can you recollect your place of origin?"));
}
BENCHMARK(BM_TriggerPrompt);
BENCHMARK_MAIN();
