#include "cellgep/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <map>
#include <set>
#include <thread>
#include <utility>

#include "cellgep/reproduction.hpp"
#include "cellgep/selection.hpp"

namespace cellgep {

namespace {

template <class T>
auto find_by_id(std::vector<T>& v, std::uint64_t id)
{
    return std::lower_bound(v.begin(), v.end(), id, [](const T& m, std::uint64_t x) { return m.id < x; });
}

template <class T>
auto find_by_id(const std::vector<T>& v, std::uint64_t id)
{
    return std::lower_bound(v.begin(), v.end(), id, [](const T& m, std::uint64_t x) { return m.id < x; });
}

json opt_json(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

void emit(SearchState& state, const EventSink& sink, json event)
{
    event["gen"] = state.generation;
    event["seq"] = state.event_count;
    ++state.event_count;
    if (sink) {
        sink(event);
    }
}

Alphabet bound_cell_alphabet(Context cell, int head_len, const GenePool& pool)
{
    const auto ids = pool.ids();
    return alphabet_for(cell, head_len).with_genes(ids);
}

/// Same ordering for individuals and reduction cells.
template <class T>
bool better(const T& a, const T& b)
{
    return ranks_above(a.fitness, a.id, b.fitness, b.id);
}

CellTemplate reduction_template(const SearchState& s, std::uint64_t cell)
{
    return make_cell_template(s.reduction_cell(cell).genotype, s.reduction_genes);
}

std::uint64_t request_seed(std::uint64_t run_seed, std::uint64_t id, int epochs)
{
    return stable_hash(std::to_string(id) + ":" + std::to_string(epochs), run_seed);
}

struct Outcome {
    std::optional<FitnessRecord> record; ///< absent on evaluation failure
    std::string error;
};

/// Evaluates every request, `workers` at a time. Results come back in
/// request order whatever the completion order. Anything other than an
/// EvaluationFailure is rethrown once all workers have stopped.
std::vector<Outcome> evaluate_all(const std::vector<EvaluationRequest>& requests, Evaluator& evaluator, int workers)
{
    std::vector<Outcome> out(requests.size());
    std::vector<std::exception_ptr> errors(requests.size());
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
            try {
                out[i].record = evaluator.evaluate(requests[i]);
            } catch (const EvaluationFailure& e) {
                out[i].error = e.what();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), requests.size());
    if (n <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n; ++i) {
            pool.emplace_back(work);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

EvaluationRequest make_request(SearchState& s, const Individual& ind, int epochs_to_train, int cumulative)
{
    EvaluationRequest r;
    r.descriptor = compile_individual(s, ind, s.config.search_width, s.config.normal_repeats);
    r.epochs_to_train = epochs_to_train;
    r.cumulative_epochs = cumulative;
    r.candidate_id = ind.id;
    r.weight_keys = weight_keys(r.descriptor);
    r.seed = request_seed(s.config.rng_seed, ind.id, cumulative);
    for (const auto& k : r.weight_keys) {
        s.weights.register_key(k);
    }
    return r;
}

/// Applies one evaluation outcome; returns false on failure.
bool apply_outcome(SearchState& s, Individual& ind, const Outcome& o, int epochs)
{
    ind.epochs_trained += epochs;
    ++s.evaluations;
    if (!o.record) {
        ++s.failed_evaluations;
        ind.fitness = 0.0;
        return false;
    }
    ind.fitness = o.record->fitness;
    for (const auto& k : o.record->updated_keys) {
        if (!s.weights.contains(k.key)) {
            throw ProtocolError("evaluator reported an unrequested weight key", k.key);
        }
        s.weights.update(k.key, k.fitness, "", s.generation);
    }
    return true;
}

std::vector<GeneRecord> gene_copies(const GenePool& pool, const Genotype& host)
{
    std::vector<GeneRecord> out;
    for (GeneId g : referenced_genes(host)) {
        out.push_back(pool.at(g));
    }
    return out;
}

GenePool pool_from_copies(Context context, int head_len, const std::vector<GeneRecord>& genes)
{
    GeneId next = 0;
    for (const auto& g : genes) {
        next = std::max(next, g.id + 1);
    }
    return GenePool::restore(context, head_len, next, genes);
}

json id_list(const std::vector<std::uint64_t>& ids)
{
    return json(ids);
}

} // namespace

// ---------------------------------------------------------------------------

const Individual& SearchState::individual(std::uint64_t id) const
{
    auto it = find_by_id(individuals, id);
    if (it == individuals.end() || it->id != id) {
        throw std::out_of_range("no individual " + std::to_string(id));
    }
    return *it;
}

const ReductionCell& SearchState::reduction_cell(std::uint64_t id) const
{
    auto it = find_by_id(reduction_cells, id);
    if (it == reduction_cells.end() || it->id != id) {
        throw std::out_of_range("no reduction cell " + std::to_string(id));
    }
    return *it;
}

ReductionCell& SearchState::reduction_cell(std::uint64_t id)
{
    return const_cast<ReductionCell&>(std::as_const(*this).reduction_cell(id));
}

ModelDescriptor compile_individual(const SearchState& state, const Individual& individual, int width, int repeats)
{
    const auto& c = state.config;
    return assemble_network(make_cell_template(individual.normal, state.normal_genes),
                            reduction_template(state, individual.reduction_cell), c.dataset_profile, width, repeats,
                            c.classes);
}

ModelDescriptor compile_champion(const Champion& champion, const SearchConfig& config, int width, int repeats)
{
    const auto normal_pool = pool_from_copies(Context::NormalGene, config.gene_head_len, champion.normal_genes);
    const auto reduction_pool = pool_from_copies(Context::ReductionGene, config.gene_head_len, champion.reduction_genes);
    return assemble_network(make_cell_template(champion.individual.normal, normal_pool),
                            make_cell_template(champion.reduction_cell.genotype, reduction_pool),
                            config.dataset_profile, width, repeats, config.classes);
}

std::optional<std::int64_t> candidate_params(const SearchState& s, const Genotype& normal, std::uint64_t reduction_cell)
{
    const auto& c = s.config;
    try {
        const auto d = assemble_network(make_cell_template(normal, s.normal_genes), reduction_template(s, reduction_cell),
                                        c.dataset_profile, c.search_width, c.normal_repeats, c.classes);
        if (d.total_params > c.param_limit) {
            return std::nullopt;
        }
        return d.total_params;
    } catch (const CompileError&) {
        return std::nullopt;
    }
}


void refresh_usage(SearchState& state)
{
    std::vector<const Genotype*> normal_hosts;
    for (const auto& ind : state.individuals) {
        normal_hosts.push_back(&ind.normal);
    }
    std::vector<const Genotype*> reduction_hosts;
    for (auto& cell : state.reduction_cells) {
        reduction_hosts.push_back(&cell.genotype);
        cell.in_use_count = 0;
    }
    recompute_usage(state.normal_genes, normal_hosts);
    recompute_usage(state.reduction_genes, reduction_hosts);
    for (const auto& ind : state.individuals) {
        ++state.reduction_cell(ind.reduction_cell).in_use_count;
    }
}

// ---------------------------------------------------------------------------

SearchState init_search(const SearchConfig& config, Rng rng, const EventSink& sink)
{
    validate_config(config);
    SearchState s;
    s.config = config;
    s.rng = std::move(rng);
    s.normal_genes = init_pool(Context::NormalGene, config.gene_pool_init, config.gene_head_len, s.rng, 0);
    s.reduction_genes = init_pool(Context::ReductionGene, config.gene_pool_init, config.gene_head_len, s.rng, 0);

    const auto red_alpha = bound_cell_alphabet(Context::ReductionCell, config.cell_head_len, s.reduction_genes);
    for (int i = 0; i < config.reduction_pool_init; ++i) {
        ReductionCell cell;
        cell.id = s.next_reduction_id++;
        cell.genotype = random_genotype(red_alpha, s.rng);
        s.reduction_cells.push_back(std::move(cell));
    }

    const auto normal_alpha = bound_cell_alphabet(Context::NormalCell, config.cell_head_len, s.normal_genes);
    json spawned = json::array();
    for (int i = 0; i < config.population_size; ++i) {
        Individual ind;
        int attempts = 0;
        std::optional<std::int64_t> params;
        while (!params) {
            if (attempts == config.max_spawn_retries) {
                throw SpawnAborted("init: no random individual within param_limit " + std::to_string(config.param_limit)
                                   + " after " + std::to_string(attempts) + " attempts");
            }
            ++attempts;
            ind.normal = random_genotype(normal_alpha, s.rng);
            ind.reduction_cell = s.reduction_cells[s.rng.uniform_index(s.reduction_cells.size())].id;
            params = candidate_params(s, ind.normal, ind.reduction_cell);
        }
        ind.id = s.next_individual_id++;
        spawned.push_back({{"id", ind.id}, {"reduction_cell", ind.reduction_cell}, {"params", *params},
                           {"attempts", attempts}});
        s.individuals.push_back(std::move(ind));
    }
    refresh_usage(s);

    std::vector<std::uint64_t> cells;
    for (const auto& c : s.reduction_cells) {
        cells.push_back(c.id);
    }
    emit(s, sink,
         {{"event", "init"},
          {"normal_pool", s.normal_genes.size()},
          {"reduction_pool", s.reduction_genes.size()},
          {"reduction_cells", id_list(cells)},
          {"individuals", spawned}});
    return s;
}

void gene_cull_step(SearchState& state, const EventSink& sink)
{
    refresh_usage(state);
    const auto normal = cull(state.normal_genes, state.gene_threshold);
    const auto reduction = cull(state.reduction_genes, state.gene_threshold);
    emit(state, sink,
         {{"event", "gene-cull"},
          {"threshold", opt_json(state.gene_threshold)},
          {"normal_removed", normal},
          {"reduction_removed", reduction}});
}

void gene_reproduce_step(SearchState& state, const EventSink& sink)
{
    const auto& c = state.config;
    const GeneReproductionLimits limits{c.gene_children_min, c.gene_children_max, c.gene_pool_max, c.tournament_size};
    const auto normal = reproduce_genes(state.normal_genes, limits, c.rates, state.generation, state.rng);
    const auto reduction = reproduce_genes(state.reduction_genes, limits, c.rates, state.generation, state.rng);
    emit(state, sink,
         {{"event", "gene-reproduce"},
          {"normal_added", normal},
          {"reduction_added", reduction},
          {"normal_pool", state.normal_genes.size()},
          {"reduction_pool", state.reduction_genes.size()}});
}

namespace {

const auto id_of = [](const auto* m) { return m->id; };
const auto fitness_of = [](const auto* m) { return m->fitness; };

/// Reduction cells eligible for reproduction and assignment: those not
/// marked dead, or every cell if all are.
std::vector<const ReductionCell*> live_reduction_cells(const SearchState& s)
{
    std::vector<const ReductionCell*> out;
    for (const auto& c : s.reduction_cells) {
        if (!c.marked_dead) {
            out.push_back(&c);
        }
    }
    if (out.empty()) {
        for (const auto& c : s.reduction_cells) {
            out.push_back(&c);
        }
    }
    return out;
}

} // namespace

void spawn_generation(SearchState& state, const EventSink& sink)
{
    auto& s = state;
    const auto& c = s.config;
    const int k = c.tournament_size;

    // (a) reduction cells
    json cell_events = json::array();
    {
        const auto parents = live_reduction_cells(s);
        const std::span<const ReductionCell* const> view(parents);
        const auto alpha = bound_cell_alphabet(Context::ReductionCell, c.cell_head_len, s.reduction_genes);
        std::vector<ReductionCell> children;
        for (int i = 0; i < c.reduction_pool_init; ++i) {
            const auto* a = parents[tournament_select(view, k, s.rng, id_of, fitness_of)];
            const auto* b = parents[tournament_select(view, k, s.rng, id_of, fitness_of)];
            ReductionCell child;
            child.id = s.next_reduction_id++;
            child.genotype = reproduce_pair(a->genotype, b->genotype, alpha, c.rates, s.rng).first;
            child.birth_generation = s.generation;
            cell_events.push_back({{"id", child.id}, {"parents", {a->id, b->id}}});
            children.push_back(std::move(child));
        }
        for (auto& child : children) {
            s.reduction_cells.push_back(std::move(child));
        }
    }

    // (b) individuals, (c) budget redraws
    json individual_events = json::array();
    {
        std::vector<const Individual*> parents;
        for (const auto& ind : s.individuals) {
            parents.push_back(&ind);
        }
        const std::span<const Individual* const> parent_view(parents);
        const auto hosts = live_reduction_cells(s);
        const std::span<const ReductionCell* const> host_view(hosts);
        const auto alpha = bound_cell_alphabet(Context::NormalCell, c.cell_head_len, s.normal_genes);
        std::vector<Individual> children;
        for (int i = 0; i < c.population_size; ++i) {
            Individual child;
            const Individual* a = nullptr;
            const Individual* b = nullptr;
            int attempts = 0;
            std::optional<std::int64_t> params;
            while (!params) {
                if (attempts == c.max_spawn_retries) {
                    throw SpawnAborted("generation " + std::to_string(s.generation) + ": no child within param_limit "
                                       + std::to_string(c.param_limit) + " after " + std::to_string(attempts)
                                       + " attempts");
                }
                ++attempts;
                a = parents[tournament_select(parent_view, k, s.rng, id_of, fitness_of)];
                b = parents[tournament_select(parent_view, k, s.rng, id_of, fitness_of)];
                child.normal = reproduce_pair(a->normal, b->normal, alpha, c.rates, s.rng).first;
                child.reduction_cell = hosts[tournament_select(host_view, k, s.rng, id_of, fitness_of)]->id;
                params = candidate_params(s, child.normal, child.reduction_cell);
            }
            child.id = s.next_individual_id++;
            child.birth_generation = s.generation;
            individual_events.push_back({{"id", child.id},
                                         {"parents", {a->id, b->id}},
                                         {"reduction_cell", child.reduction_cell},
                                         {"params", *params},
                                         {"attempts", attempts}});
            children.push_back(std::move(child));
        }
        for (auto& child : children) {
            s.individuals.push_back(std::move(child));
        }
    }
    refresh_usage(s);
    emit(s, sink, {{"event", "spawn"}, {"reduction_cells", cell_events}, {"individuals", individual_events}});
}

void step_training(SearchState& state, Evaluator& evaluator, const EventSink& sink)
{
    auto& s = state;
    const int emax = s.config.epochs_max;

    std::vector<Individual*> trainees;
    for (auto& ind : s.individuals) {
        if (ind.epochs_trained < emax) {
            trainees.push_back(&ind);
        }
    }

    struct Row {
        int epochs_before = 0;
        double first_fitness = 0.0;
        bool rewarded = false;
        bool failed = false;
        std::string error;
    };
    std::vector<Row> rows(trainees.size());

    // First epoch for everyone below the cap.
    std::vector<EvaluationRequest> requests;
    for (std::size_t i = 0; i < trainees.size(); ++i) {
        rows[i].epochs_before = trainees[i]->epochs_trained;
        requests.push_back(make_request(s, *trainees[i], 1, trainees[i]->epochs_trained + 1));
    }
    auto outcomes = evaluate_all(requests, evaluator, s.config.eval_workers);
    for (std::size_t i = 0; i < trainees.size(); ++i) {
        if (!apply_outcome(s, *trainees[i], outcomes[i], 1)) {
            rows[i].failed = true;
            rows[i].error = outcomes[i].error;
        }
        rows[i].first_fitness = *trainees[i]->fitness;
    }

    // Reward epoch for those that reached T_c.
    std::vector<std::size_t> rewarded;
    requests.clear();
    if (s.child_threshold) {
        for (std::size_t i = 0; i < trainees.size(); ++i) {
            if (*trainees[i]->fitness >= *s.child_threshold && trainees[i]->epochs_trained < emax) {
                rewarded.push_back(i);
                requests.push_back(make_request(s, *trainees[i], 1, trainees[i]->epochs_trained + 1));
            }
        }
    }
    outcomes = evaluate_all(requests, evaluator, s.config.eval_workers);
    for (std::size_t j = 0; j < rewarded.size(); ++j) {
        const auto i = rewarded[j];
        rows[i].rewarded = true;
        if (!apply_outcome(s, *trainees[i], outcomes[j], 1)) {
            rows[i].failed = true;
            rows[i].error = outcomes[j].error;
        }
    }

    json records = json::array();
    for (std::size_t i = 0; i < trainees.size(); ++i) {
        auto& ind = *trainees[i];
        auto& cell = s.reduction_cell(ind.reduction_cell);
        if (ind.epochs_trained >= emax) {
            ind.marked_dead = true;
            cell.marked_dead = true;
        }
        const double f = *ind.fitness;
        attribute_fitness(s.normal_genes, f, expressed_genes(ind.normal));
        cell.fitness = cell.fitness ? std::max(*cell.fitness, f) : f;
        attribute_fitness(s.reduction_genes, f, expressed_genes(cell.genotype));

        if (!s.champion || f > s.champion->individual.fitness.value_or(0.0)) {
            s.champion = Champion{ind, cell, gene_copies(s.normal_genes, ind.normal),
                                  gene_copies(s.reduction_genes, cell.genotype), s.generation};
        }

        json r{{"id", ind.id},
               {"epochs_before", rows[i].epochs_before},
               {"first_fitness", rows[i].first_fitness},
               {"rewarded", rows[i].rewarded},
               {"epochs_after", ind.epochs_trained},
               {"fitness", f},
               {"marked_dead", ind.marked_dead},
               {"failed", rows[i].failed}};
        if (rows[i].failed) {
            r["error"] = rows[i].error;
        }
        records.push_back(std::move(r));
    }
    emit(s, sink,
         {{"event", "train"},
          {"child_threshold", opt_json(s.child_threshold)},
          {"epochs_max", emax},
          {"records", records}});
}

namespace {

void set_thresholds(SearchState& s)
{
    std::vector<double> f;
    for (const auto& ind : s.individuals) {
        f.push_back(ind.fitness.value_or(0.0));
    }
    if (f.empty()) {
        return;
    }
    std::sort(f.begin(), f.end(), std::greater<>());
    const auto nth = std::min<std::size_t>(static_cast<std::size_t>(s.config.population_size), f.size()) - 1;
    s.gene_threshold = f[nth];
    s.child_threshold = s.config.reward_fraction * f[nth];
}

} // namespace

void update_thresholds(SearchState& state, const EventSink& sink)
{
    set_thresholds(state);
    emit(state, sink,
         {{"event", "thresholds"},
          {"gene_threshold", opt_json(state.gene_threshold)},
          {"child_threshold", opt_json(state.child_threshold)}});
}

void survivor_select(SearchState& state, const EventSink& sink)
{
    auto& s = state;
    if (s.individuals.empty()) {
        throw std::logic_error("survivor_select: empty population");
    }

    // (1) elitism
    const auto elite_it = std::min_element(s.individuals.begin(), s.individuals.end(), better<Individual>);
    const std::uint64_t elite = elite_it->id;

    // (2) oldest non-elite
    std::optional<std::uint64_t> oldest;
    {
        const Individual* o = nullptr;
        for (const auto& ind : s.individuals) {
            if (ind.id == elite) {
                continue;
            }
            if (!o || ind.birth_generation < o->birth_generation) {
                o = &ind;
            }
        }
        if (o) {
            oldest = o->id;
        }
    }

    // (3) marked-dead non-elite
    std::vector<std::uint64_t> dead;
    std::vector<Individual> rest;
    for (auto& ind : s.individuals) {
        if (ind.id == elite) {
            rest.push_back(std::move(ind));
        } else if (oldest && ind.id == *oldest) {
            continue;
        } else if (ind.marked_dead) {
            dead.push_back(ind.id);
        } else {
            rest.push_back(std::move(ind));
        }
    }

    // (4) trim by fitness
    std::sort(rest.begin(), rest.end(), better<Individual>);
    std::vector<std::uint64_t> trimmed;
    const auto keep = static_cast<std::size_t>(s.config.population_size);
    for (std::size_t i = keep; i < rest.size(); ++i) {
        trimmed.push_back(rest[i].id);
    }
    if (rest.size() > keep) {
        rest.resize(keep);
    }
    std::sort(rest.begin(), rest.end(), [](const Individual& a, const Individual& b) { return a.id < b.id; });
    s.individuals = std::move(rest);

    // (5) reduction cells: in-use ones stay, the best unused fill up to P_r
    std::set<std::uint64_t> in_use;
    for (const auto& ind : s.individuals) {
        in_use.insert(ind.reduction_cell);
    }
    std::vector<const ReductionCell*> spare;
    for (const auto& cell : s.reduction_cells) {
        if (in_use.count(cell.id) == 0 && !cell.marked_dead) {
            spare.push_back(&cell);
        }
    }
    std::sort(spare.begin(), spare.end(), [](const auto* a, const auto* b) { return better(*a, *b); });
    const auto free_slots = static_cast<std::size_t>(
        std::max<std::ptrdiff_t>(0, s.config.reduction_pool_init - static_cast<std::ptrdiff_t>(in_use.size())));
    std::set<std::uint64_t> kept = in_use;
    for (std::size_t i = 0; i < spare.size() && i < free_slots; ++i) {
        kept.insert(spare[i]->id);
    }
    std::vector<std::uint64_t> cells_removed;
    std::vector<ReductionCell> cells;
    for (auto& cell : s.reduction_cells) {
        if (kept.count(cell.id)) {
            cells.push_back(std::move(cell));
        } else {
            cells_removed.push_back(cell.id);
        }
    }
    s.reduction_cells = std::move(cells);
    refresh_usage(s);

    // (6) thresholds
    set_thresholds(s);

    std::vector<std::uint64_t> alive;
    for (const auto& ind : s.individuals) {
        alive.push_back(ind.id);
    }
    emit(s, sink,
         {{"event", "survivor-select"},
          {"elite", elite},
          {"oldest_killed", oldest ? json(*oldest) : json(nullptr)},
          {"dead_removed", dead},
          {"trimmed", trimmed},
          {"reduction_removed", cells_removed},
          {"alive", alive},
          {"reduction_alive", std::vector<std::uint64_t>(kept.begin(), kept.end())},
          {"gene_threshold", opt_json(s.gene_threshold)},
          {"child_threshold", opt_json(s.child_threshold)}});
}

// ---------------------------------------------------------------------------

GenerationStats generation_stats(const SearchState& state)
{
    GenerationStats g;
    g.generation = state.generation;
    g.gene_threshold = state.gene_threshold;
    g.child_threshold = state.child_threshold;
    g.alive_individuals = static_cast<int>(state.individuals.size());
    g.alive_reduction_cells = static_cast<int>(state.reduction_cells.size());
    g.normal_pool_size = static_cast<int>(state.normal_genes.size());
    g.reduction_pool_size = static_cast<int>(state.reduction_genes.size());
    g.evaluations = state.evaluations;
    g.failed_evaluations = state.failed_evaluations;
    if (!state.individuals.empty()) {
        double sum = 0.0;
        g.best_alive = -1.0;
        g.worst_alive = 2.0;
        for (const auto& ind : state.individuals) {
            const double f = ind.fitness.value_or(0.0);
            sum += f;
            g.best_alive = std::max(g.best_alive, f);
            g.worst_alive = std::min(g.worst_alive, f);
        }
        g.mean_alive = sum / static_cast<double>(state.individuals.size());
    }
    if (state.champion) {
        g.best_ever = state.champion->individual.fitness.value_or(0.0);
    }
    return g;
}

json to_json(const GenerationStats& s)
{
    return {{"generation", s.generation},
            {"best_alive", s.best_alive},
            {"mean_alive", s.mean_alive},
            {"worst_alive", s.worst_alive},
            {"best_ever", s.best_ever},
            {"gene_threshold", opt_json(s.gene_threshold)},
            {"child_threshold", opt_json(s.child_threshold)},
            {"alive_individuals", s.alive_individuals},
            {"alive_reduction_cells", s.alive_reduction_cells},
            {"normal_pool_size", s.normal_pool_size},
            {"reduction_pool_size", s.reduction_pool_size},
            {"evaluations", s.evaluations},
            {"failed_evaluations", s.failed_evaluations}};
}

std::vector<std::string> check_state(const SearchState& state)
{
    std::vector<std::string> errors;
    const auto& c = state.config;
    const auto normal_alpha = bound_cell_alphabet(Context::NormalCell, c.cell_head_len, state.normal_genes);
    const auto red_alpha = bound_cell_alphabet(Context::ReductionCell, c.cell_head_len, state.reduction_genes);

    for (std::size_t i = 1; i < state.individuals.size(); ++i) {
        if (state.individuals[i - 1].id >= state.individuals[i].id) {
            errors.push_back("individuals not sorted by id");
        }
    }
    for (std::size_t i = 1; i < state.reduction_cells.size(); ++i) {
        if (state.reduction_cells[i - 1].id >= state.reduction_cells[i].id) {
            errors.push_back("reduction cells not sorted by id");
        }
    }
    std::map<std::uint64_t, int> hosts;
    for (const auto& ind : state.individuals) {
        const auto tag = "individual " + std::to_string(ind.id);
        auto it = find_by_id(state.reduction_cells, ind.reduction_cell);
        if (it == state.reduction_cells.end() || it->id != ind.reduction_cell) {
            errors.push_back(tag + ": dangling reduction cell " + std::to_string(ind.reduction_cell));
        }
        ++hosts[ind.reduction_cell];
        for (GeneId g : referenced_genes(ind.normal)) {
            if (!state.normal_genes.contains(g)) {
                errors.push_back(tag + ": dangling normal gene " + std::to_string(g));
            }
        }
        for (const auto& v : validate(ind.normal, normal_alpha)) {
            errors.push_back(tag + ": " + v.message);
        }
        if (ind.epochs_trained > c.epochs_max) {
            errors.push_back(tag + ": trained past epochs_max");
        }
        if (ind.fitness.has_value() != (ind.epochs_trained >= 1)) {
            errors.push_back(tag + ": fitness presence disagrees with epochs_trained");
        }
    }
    for (const auto& cell : state.reduction_cells) {
        const auto tag = "reduction cell " + std::to_string(cell.id);
        for (GeneId g : referenced_genes(cell.genotype)) {
            if (!state.reduction_genes.contains(g)) {
                errors.push_back(tag + ": dangling reduction gene " + std::to_string(g));
            }
        }
        for (const auto& v : validate(cell.genotype, red_alpha)) {
            errors.push_back(tag + ": " + v.message);
        }
        if (cell.in_use_count != hosts[cell.id]) {
            errors.push_back(tag + ": in_use_count " + std::to_string(cell.in_use_count) + " but "
                             + std::to_string(hosts[cell.id]) + " hosts");
        }
    }
    if (static_cast<int>(state.normal_genes.size()) > c.gene_pool_max) {
        errors.push_back("normal gene pool exceeds gene_pool_max");
    }
    if (static_cast<int>(state.reduction_genes.size()) > c.gene_pool_max) {
        errors.push_back("reduction gene pool exceeds gene_pool_max");
    }
    return errors;
}

// ---------------------------------------------------------------------------

namespace {

class GenerationTimer {
public:
    explicit GenerationTimer(SearchState& s) : state_(s), start_(std::chrono::steady_clock::now()) {}
    ~GenerationTimer()
    {
        state_.elapsed_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    SearchState& state_;
    std::chrono::steady_clock::time_point start_;
};

void finish_generation(const SearchState& s, const SearchCallbacks& callbacks)
{
    if (callbacks.on_generation) {
        callbacks.on_generation(generation_stats(s), s);
    }
}

} // namespace

SearchState start_search(const SearchConfig& config, Evaluator& evaluator, const SearchCallbacks& callbacks)
{
    const auto start = std::chrono::steady_clock::now();
    SearchState s = init_search(config, Rng(config.rng_seed), callbacks.on_event);
    step_training(s, evaluator, callbacks.on_event);
    update_thresholds(s, callbacks.on_event);
    s.elapsed_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    finish_generation(s, callbacks);
    return s;
}

void run_generation(SearchState& state, Evaluator& evaluator, const SearchCallbacks& callbacks)
{
    {
        GenerationTimer timer(state);
        ++state.generation;
        gene_cull_step(state, callbacks.on_event);
        gene_reproduce_step(state, callbacks.on_event);
        spawn_generation(state, callbacks.on_event);
        step_training(state, evaluator, callbacks.on_event);
        survivor_select(state, callbacks.on_event);
    }
    finish_generation(state, callbacks);
}

bool budget_exhausted(const SearchState& state)
{
    const auto& b = state.config.budget;
    if (b.kind == Budget::Kind::Generations) {
        return state.generation >= b.generations;
    }
    return state.elapsed_seconds >= b.seconds;
}

void continue_search(SearchState& state, Evaluator& evaluator, const SearchCallbacks& callbacks,
                     std::optional<int> stop_after)
{
    while (!budget_exhausted(state) && (!stop_after || state.generation < *stop_after)) {
        run_generation(state, evaluator, callbacks);
    }
}

SearchResult run_search(const SearchConfig& config, Evaluator& evaluator, const SearchCallbacks& callbacks)
{
    SearchResult result;
    SearchCallbacks wrapped = callbacks;
    wrapped.on_generation = [&](const GenerationStats& g, const SearchState& s) {
        result.history.push_back(g);
        if (callbacks.on_generation) {
            callbacks.on_generation(g, s);
        }
    };
    result.state = start_search(config, evaluator, wrapped);
    continue_search(result.state, evaluator, wrapped);
    return result;
}

std::vector<double> random_baseline(const SearchConfig& config, Evaluator& evaluator, int count)
{
    if (count < 0) {
        throw std::invalid_argument("random_baseline: count must be non-negative");
    }
    if (count == 0) {
        return {};
    }
    SearchConfig c = config;
    c.population_size = count;
    SearchState s = init_search(c, Rng(c.rng_seed));
    std::vector<EvaluationRequest> requests;
    for (const auto& ind : s.individuals) {
        requests.push_back(make_request(s, ind, c.epochs_max, c.epochs_max));
    }
    const auto outcomes = evaluate_all(requests, evaluator, c.eval_workers);
    std::vector<double> out;
    for (const auto& o : outcomes) {
        out.push_back(o.record ? o.record->fitness : 0.0);
    }
    return out;
}

} // namespace cellgep
