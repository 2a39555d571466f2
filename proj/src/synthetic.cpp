#include "sift/synthetic.h"

#include "sift/error.h"
#include "sift/random.h"

#include <algorithm>
#include <set>

namespace sift {

using nlohmann::json;

GrammarConfig grammar_from_json(const json& j)
{
    GrammarConfig g;
    g.vocab_size = j.value("vocab_size", g.vocab_size);
    g.embedding_dim = j.value("embedding_dim", g.embedding_dim);
    g.max_length = j.value("max_length", g.max_length);
    g.relations = j.value("relations", g.relations);
    g.label_relation = j.value("label_relation", g.label_relation);
    g.alternate_object_rate = j.value("alternate_object_rate", g.alternate_object_rate);
    g.adjective_rate = j.value("adjective_rate", g.adjective_rate);
    g.pp_rate = j.value("pp_rate", g.pp_rate);
    g.pair = j.value("pair", g.pair);
    return g;
}

json grammar_to_json(const GrammarConfig& g)
{
    return {{"vocab_size", g.vocab_size},
            {"embedding_dim", g.embedding_dim},
            {"max_length", g.max_length},
            {"relations", g.relations},
            {"label_relation", g.label_relation},
            {"alternate_object_rate", g.alternate_object_rate},
            {"adjective_rate", g.adjective_rate},
            {"pp_rate", g.pp_rate},
            {"pair", g.pair}};
}

bool has_relation(const SemanticGraph& g, int relation)
{
    return std::any_of(g.edges.begin(), g.edges.end(),
                       [relation](const Edge& e) { return e.relation == relation; });
}

namespace {

enum WordClass { kDet, kAdj, kNoun, kVerb, kPrep, kNumClasses };

constexpr const char* kPosTags[] = {"DT", "JJ", "NN", "VB", "IN"};

struct Word {
    std::string surface;
    std::vector<std::string> pieces;  // continuation pieces carry "##"
};

struct Lexicon {
    std::vector<Word> words[kNumClasses];
};

Lexicon build_lexicon(std::uint64_t seed, int vocab_size)
{
    static const std::string consonants = "kptmnslrdgbfvzh";
    static const std::string vowels = "aeiou";
    const int det = std::max(1, vocab_size / 12);
    const int prep = std::max(1, vocab_size / 12);
    const int rest = vocab_size - det - prep;
    const int adj = rest / 3, noun = rest / 3, verb = rest - adj - noun;
    if (adj < 1 || noun < 1 || verb < 1)
        throw ValidationError("synthetic grammar: vocab_size too small for five word classes");
    const int sizes[kNumClasses] = {det, adj, noun, verb, prep};

    Rng rng(derive_seed(seed, "lexicon"));
    std::set<std::string> used;
    Lexicon lex;
    for (int c = 0; c < kNumClasses; ++c) {
        while (static_cast<int>(lex.words[c].size()) < sizes[c]) {
            const int n_syl = 1 + static_cast<int>(rng.below(3));
            std::vector<std::string> syl;
            for (int s = 0; s < n_syl; ++s) {
                std::string x;
                x += consonants[rng.below(consonants.size())];
                x += vowels[rng.below(vowels.size())];
                syl.push_back(x);
            }
            std::string surface;
            for (const auto& s : syl)
                surface += s;
            if (!used.insert(surface).second)
                continue;
            Word w{surface, {}};
            if (n_syl == 3) {
                w.pieces = {syl[0] + syl[1], "##" + syl[2]};
            } else {
                w.pieces = {surface};
            }
            lex.words[c].push_back(std::move(w));
        }
    }
    return lex;
}

num::RowVector piece_vector(std::uint64_t seed, const std::string& piece, int dim)
{
    Rng rng(derive_seed(seed, "piece:" + piece));
    num::RowVector v(dim);
    for (int k = 0; k < dim; ++k)
        v(k) = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

struct Slot {
    WordClass cls;
    int word = 0;      // index into the lexicon class; -1 for "."
    int tree_head = 0; // 1-based, 0 = root
    std::string deprel;
};

} // namespace

SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, int n_sentences,
                                          const GrammarConfig& config)
{
    if (config.vocab_size < 5)
        throw ValidationError("synthetic grammar: empty or degenerate vocabulary");
    if (config.relations.size() < 4)
        throw ValidationError("synthetic grammar: need four relation roles");
    if (config.max_length < 6)
        throw ValidationError("synthetic grammar: max_length must be at least 6");
    if (config.embedding_dim <= 0)
        throw ValidationError("synthetic grammar: embedding_dim must be positive");
    if (n_sentences < 0)
        throw ValidationError("synthetic grammar: negative sentence count");

    SyntheticCorpus out;
    out.corpus.relations = RelationVocab(config.relations);
    const RelationVocab& vocab = out.corpus.relations;
    const int label_rel = vocab.index(config.label_relation);
    const int r_arg = 0, r_obj = 1, r_alt = 2, r_bv = 3;

    const Lexicon lex = build_lexicon(seed, config.vocab_size);

    for (int k = 0; k < n_sentences; ++k) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        bool adj_subj = rng.bernoulli(config.adjective_rate);
        bool adj_obj = rng.bernoulli(config.adjective_rate);
        bool adj_pobj = rng.bernoulli(config.adjective_rate);
        bool pp = rng.bernoulli(config.pp_rate);
        const bool pp_to_verb = rng.bernoulli(0.5);
        const bool alt_object = rng.bernoulli(config.alternate_object_rate);
        auto length = [&] {
            return 6 + adj_subj + adj_obj + (pp ? 3 + adj_pobj : 0);
        };
        if (length() > config.max_length)
            pp = false;
        if (length() > config.max_length)
            adj_obj = false;
        if (length() > config.max_length)
            adj_subj = false;

        auto pick = [&](WordClass c) {
            return static_cast<int>(rng.below(lex.words[c].size()));
        };

        // Token layout: [det adj? noun] verb [det adj? noun] [prep det adj? noun]? .
        std::vector<Slot> slots;
        auto np = [&](bool adj) {
            const int det_i = static_cast<int>(slots.size());
            slots.push_back({kDet, pick(kDet), 0, "det"});
            int adj_i = -1;
            if (adj) {
                adj_i = static_cast<int>(slots.size());
                slots.push_back({kAdj, pick(kAdj), 0, "amod"});
            }
            const int noun_i = static_cast<int>(slots.size());
            slots.push_back({kNoun, pick(kNoun), 0, ""});
            slots[static_cast<std::size_t>(det_i)].tree_head = noun_i + 1;
            if (adj_i >= 0)
                slots[static_cast<std::size_t>(adj_i)].tree_head = noun_i + 1;
            return std::tuple{det_i, adj_i, noun_i};
        };
        const auto [s_det, s_adj, s_noun] = np(adj_subj);
        const int verb = static_cast<int>(slots.size());
        slots.push_back({kVerb, pick(kVerb), 0, "root"});
        const auto [o_det, o_adj, o_noun] = np(adj_obj);
        int prep = -1, p_det = -1, p_adj = -1, p_noun = -1;
        if (pp) {
            prep = static_cast<int>(slots.size());
            slots.push_back({kPrep, pick(kPrep), 0, "prep"});
            std::tie(p_det, p_adj, p_noun) = np(adj_pobj);
        }
        slots.push_back({kNumClasses, -1, verb + 1, "punct"});

        auto at = [&](int i) -> Slot& { return slots[static_cast<std::size_t>(i)]; };
        at(s_noun).tree_head = verb + 1;
        at(s_noun).deprel = "nsubj";
        at(o_noun).tree_head = verb + 1;
        at(o_noun).deprel = "dobj";
        const int attach = pp_to_verb ? verb : o_noun;
        if (pp) {
            at(prep).tree_head = attach + 1;
            at(p_noun).tree_head = prep + 1;
            at(p_noun).deprel = "pobj";
        }

        CorpusRecord rec;
        std::vector<std::string> forms;
        for (const Slot& s : slots)
            forms.push_back(s.word < 0 ? "." : lex.words[s.cls][static_cast<std::size_t>(s.word)].surface);
        rec.sentence = sentence_from_forms(forms);
        rec.sentence.id = std::to_string(k);
        DependencyTree tree;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            rec.sentence.tokens[i].lemma = forms[i];
            rec.sentence.tokens[i].pos = slots[i].word < 0 ? "." : kPosTags[slots[i].cls];
            tree.heads.push_back(slots[i].tree_head);
            tree.labels.push_back(slots[i].deprel);
        }
        check_tree(tree);
        rec.tree = std::move(tree);

        SemanticGraph& g = rec.graph;
        g.num_nodes = static_cast<int>(slots.size());
        g.top_nodes = {verb};
        auto bind_np = [&](int det_i, int adj_i, int noun_i) {
            g.edges.push_back({det_i, noun_i, r_bv});
            if (adj_i >= 0)
                g.edges.push_back({adj_i, noun_i, r_arg});
        };
        bind_np(s_det, s_adj, s_noun);
        bind_np(o_det, o_adj, o_noun);
        g.edges.push_back({verb, s_noun, r_arg});
        g.edges.push_back({verb, o_noun, alt_object ? r_alt : r_obj});
        if (pp) {
            bind_np(p_det, p_adj, p_noun);
            g.edges.push_back({prep, attach, r_arg});
            g.edges.push_back({prep, p_noun, r_obj});
        }
        std::sort(g.edges.begin(), g.edges.end());
        g = validate_graph(std::move(g), vocab);
        for (const Edge& e : g.edges)
            rec.sentence.tokens[static_cast<std::size_t>(e.source)].predicate = true;

        // Wordpieces with character offsets, plus empty-span boundary markers.
        EmbeddingSequence emb;
        emb.dim = config.embedding_dim;
        emb.pieces.push_back({"<s>", 0, 0});
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const Token& tok = rec.sentence.tokens[i];
            if (slots[i].word < 0) {
                emb.pieces.push_back({".", tok.start, tok.end});
                continue;
            }
            int pos = tok.start;
            for (const auto& p : lex.words[slots[i].cls][static_cast<std::size_t>(slots[i].word)].pieces) {
                const int len = static_cast<int>(p.starts_with("##") ? p.size() - 2 : p.size());
                emb.pieces.push_back({p, pos, pos + len});
                pos += len;
            }
        }
        const int text_len = static_cast<int>(rec.sentence.text.size());
        emb.pieces.push_back({"</s>", text_len, text_len});
        emb.vectors.resize(static_cast<Eigen::Index>(emb.pieces.size()), emb.dim);
        for (std::size_t j = 0; j < emb.pieces.size(); ++j)
            emb.vectors.row(static_cast<Eigen::Index>(j)) =
                piece_vector(seed, emb.pieces[j].text, emb.dim);
        emb.pooled = emb.vectors.colwise().mean();
        for (Eigen::Index c = 0; c < emb.dim; ++c)
            emb.pooled(c) = static_cast<float>(emb.pooled(c));
        rec.embedding = std::move(emb);

        const int label = has_relation(g, label_rel) ? 1 : 0;
        rec.label = label;
        rec.category = !pp ? "no_pp" : (pp_to_verb ? "pp/verb" : "pp/noun");
        out.labels.push_back(label);
        out.corpus.records.push_back(std::move(rec));
    }
    return out;
}

TaskDataset generate_synthetic_task(std::uint64_t seed, int n_examples, const GrammarConfig& config)
{
    const int per = config.pair ? 2 : 1;
    auto synth = generate_synthetic_corpus(seed, n_examples * per, config);
    TaskDataset data;
    data.schema.type = TaskType::classification;
    data.schema.pair = config.pair;
    data.schema.labels = {"0", "1"};
    data.schema.categories = {"no_pp", "pp/noun", "pp/verb"};
    data.relations = synth.corpus.relations;
    auto side = [](CorpusRecord& r) {
        TaskSide s;
        s.sentence = r.sentence;
        s.graph = r.graph;
        s.embedding = r.embedding;
        return s;
    };
    for (int i = 0; i < n_examples; ++i) {
        auto& ra = synth.corpus.records[static_cast<std::size_t>(i * per)];
        TaskExample ex;
        ex.a = side(ra);
        ex.category = ra.category;
        ex.label = synth.labels[static_cast<std::size_t>(i * per)];
        if (config.pair) {
            auto& rb = synth.corpus.records[static_cast<std::size_t>(i * per + 1)];
            ex.b = side(rb);
            ex.label = ex.label & synth.labels[static_cast<std::size_t>(i * per + 1)];
        }
        data.examples.push_back(std::move(ex));
    }
    return data;
}

} // namespace sift
