#include "revgen/pge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <thread>

#include "revgen/error.hpp"
#include "revgen/text.hpp"

namespace revgen {

using nlohmann::json;

namespace {

const TemplateSet& templates_of(const PromptCallOptions& options) {
  return options.templates ? *options.templates : TemplateSet::builtin();
}

std::string numbered(const std::vector<std::string>& questions) {
  AspectPrompt p;
  p.questions = questions;
  return p.numbered();
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

// ---------------------------------------------------------------------------
// Example pool

ExamplePool::ExamplePool(std::vector<PoolEntry> seeds) {
  for (auto& s : seeds) {
    s.prompt.score = 5;
    s.prompt.excluded = false;
    entries_.push_back(std::move(s));
  }
  seed_count_ = entries_.size();
}

ExamplePool::ExamplePool(const ExamplePool& other) {
  std::lock_guard lock(other.mutex_);
  entries_ = other.entries_;
  seed_count_ = other.seed_count_;
}

ExamplePool& ExamplePool::operator=(const ExamplePool& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  entries_ = other.entries_;
  seed_count_ = other.seed_count_;
  return *this;
}

void ExamplePool::append(PoolEntry entry) {
  if (entry.prompt.score != 5 || entry.prompt.excluded)
    throw InvalidInput("only prompts scored 5 may enter the example pool");
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(entry));
}

std::size_t ExamplePool::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::size_t ExamplePool::seed_count() const {
  std::lock_guard lock(mutex_);
  return seed_count_;
}

PoolEntry ExamplePool::at(std::size_t index) const {
  std::lock_guard lock(mutex_);
  if (index >= entries_.size()) throw InvalidInput("pool index out of range");
  return entries_[index];
}

std::vector<PoolEntry> ExamplePool::snapshot() const {
  std::lock_guard lock(mutex_);
  return {entries_.begin(), entries_.end()};
}

ExamplePool ExamplePool::load_seed_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read seed pool " + path.string());
  std::vector<PoolEntry> seeds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      PoolEntry e;
      e.prompt.paper_id = j.value("paper_id", "seed-" + std::to_string(seeds.size()));
      e.prompt.review_index = j.value("review_index", 0);
      e.prompt.questions = j.at("questions").get<std::vector<std::string>>();
      e.prompt.attempts = 0;
      e.review_text = j.at("review_text").get<std::string>();
      if (e.prompt.questions.empty() || text::trim(e.review_text).empty())
        throw MalformedRecord("seed pool line " + std::to_string(line_no) + " is empty");
      seeds.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw MalformedRecord("seed pool line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ExamplePool(std::move(seeds));
}

void ExamplePool::write_jsonl(std::ostream& out) const {
  const auto entries = snapshot();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    out << json{{"paper_id", e.prompt.paper_id},
                {"review_index", e.prompt.review_index},
                {"questions", e.prompt.questions},
                {"review_text", e.review_text},
                {"seed", i < seed_count_}}
               .dump()
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Rubric

const Rubric& Rubric::standard() {
  static const Rubric rubric = [] {
    Rubric r;
    r.descriptors = {
        "This score indicates that the response deviates significantly from the instruction, "
        "providing information or addressing aspects that were not required or specified.",
        "This score suggests that the response is limited in scope, focusing on a small subset "
        "of the questions posed in the instruction. It does not comprehensively cover the "
        "entire set of questions.",
        "This score indicates that the response covers a substantial portion of the questions "
        "outlined in the instruction but falls short of addressing all of them. It suggests a "
        "moderate level of completeness.",
        "This score indicates that the response covers most of the questions. However, there "
        "is some irrelevant information in the answer that is not asked by any of the "
        "questions.",
        "This score indicates that the response is comprehensive, addressing all questions in "
        "the instruction without any irrelevant information.",
    };

    r.examples[0] = {
        {"What is the main contribution of the paper on graph neural networks?",
         "What are the weaknesses of the experimental evaluation?",
         "Do you have any concerns about the scalability of the method?"},
        "I reviewed this paper last year for another venue. The formatting of the references "
        "is inconsistent and several figures use fonts that are too small to read when "
        "printed. The supplementary archive could not be opened on my machine. I suggest the "
        "authors proofread the manuscript before resubmitting.",
        "The questions ask about the contribution, the experimental evaluation, and the "
        "scalability of the method. The answer discusses none of these. It only comments on "
        "formatting, figure fonts, and the supplementary archive, which no question asks "
        "about.",
        1};

    r.examples[1] = {
        {"What is the focus and contribution of the paper on text summarization?",
         "What are the strengths of the proposed decoding strategy?",
         "What are the weaknesses of the human evaluation?",
         "Do you have any suggestions for improving the clarity of the paper?"},
        "The paper proposes a constrained decoding strategy for abstractive summarization that "
        "keeps generated entities faithful to the source document. The method is simple and "
        "can be added to any pretrained summarizer without retraining.",
        "The answer addresses the first question by describing the focus of the paper, and "
        "touches on the second question by noting that the method is simple. It does not "
        "discuss the human evaluation or the clarity of the paper, so only a small subset of "
        "the questions is covered.",
        2};

    r.examples[2] = {
        {"What is the main contribution of the paper on dictionary learning?",
         "What are the strengths of the paper in the theoretical analysis?",
         "Do you have any questions regarding the assumptions, theorems, and algorithm of the "
         "paper?",
         "Could you access the reproducibility of the paper?"},
        "The paper proposes an alternating minimization algorithm for dictionary learning, and "
        "theoretical guarantees are also given. In each step the algorithm first uses an l1, "
        "l2 and l_infty algorithm with thresholding to get an estimate of the coefficients, "
        "and then use another gradient step to update the dictionary.\n"
        "To me two shining points of the paper:\n"
        "1. Guarantee holds for the overcomplete dictionary.\n"
        "2. Improved the sparsity level requirement by a factor of log d.\n"
        "Obviously the NIPS format is too short for the arguments the authors are making, and "
        "a lot of details are moved to the appendix. Due to time limit I cannot read all the "
        "details of the proof. Below are some questions:\n"
        "1. In A1 you have a mu-incoherence assumption, but mu is not shown in your theorem 3. "
        "Is it hidden somewhere?\n"
        "2. In assumption B1 you mentioned, and I agree that there is a fast random "
        "initialization so that the condition holds. Can you give some details about your "
        "initialization procedure and guarantees?\n"
        "3. How do you handle the permutation invariance of A?\n"
        "4. In your algorithm 1, line 3, the MUS algorithm has a return, but in your "
        "definition (equation 2), the return is not specified. Actually the returned should "
        "be theta instead of (theta, t, u).\n"
        "5. “(w_k^t is the k^th covariate at step t)”? Why w_k^t is called the "
        "k^th covariate?\n"
        "6. Any simulation result verifying your convergence rate?",
        "The answer addresses the first question by summarizing the main contribution of the "
        "paper.\n\n"
        "For the second question, the answer gives two strong points of the paper in its "
        "theoretical justifications. The answer address the third question by providing six "
        "different questions convering the assumptions, theorems, and the algorithm of the "
        "paper. However, the answer fails to address the fourth question. Since the answer "
        "fails to address all of the questions, it receives a score of 3.",
        3};

    r.examples[3] = {
        {"What is the focus and contribution of the paper on speech recognition?",
         "What are the strengths of the proposed data augmentation?",
         "What are the weaknesses of the experiments?"},
        "The paper studies low-resource speech recognition and contributes a data augmentation "
        "scheme that perturbs the speaking rate of the training audio. The augmentation is "
        "cheap and gives consistent gains on three languages. The experiments lack a "
        "comparison with SpecAugment and report a single run per setting. I also attended a "
        "talk by one of the authors where a different dataset was used, and I wonder how the "
        "group funds its annotation effort.",
        "The answer covers the contribution, the strengths of the augmentation, and the "
        "weaknesses of the experiments. However, the remarks about a talk by one of the "
        "authors and the funding of the annotation effort are not asked by any of the "
        "questions.",
        4};

    r.examples[4] = {
        {"What is the focus and contribution of the paper on semantic correspondence?",
         "What are the strengths of the proposed approach in terms of neural representation?",
         "What are the weaknesses for the experiment section?",
         "Do you have any concerns on the semantic correspondence representation?",
         "What are the limitations regarding the NeMF approach on matching cost "
         "representation?"},
        "Summary Of The Paper\n"
        "This paper introduces neural matching fields into semantic correspondence. To the "
        "best my knowledge, this approach should be the first method to do the task using "
        "implicit neural representation. There are two problems: the computation for 4D "
        "matching field and the inference efficiency. Authors provide effect method to "
        "address the two problems.\n"
        "Strengths And Weaknesses\n"
        "This paper employs implicit neural representation to do semantic correspondence. "
        "This should be the major contribution. According to the statement of authors, I can "
        "follow the idea easily and this idea should work. The disadvantage of this work is "
        "the experiments. There are too many quantitative comparisons. According to the data, "
        "the performance of this method seems OK. However, authors should provide more visual "
        "experiments to convince readers.\n"
        "Questions\n"
        "I only have one concern. Traditional Implicit Neural Representation method such as "
        "LIIF and NeRF records images into the weights of neural network. One neural network "
        "represents one image or one scene. Does NeMF take a neural network to represent a "
        "semantic correspondence or a matching cost. If so, how much time will your method "
        "cost to train a network? If not so, what is the difference between your method and "
        "other semantic correspondence methods.\n"
        "Limitations\n"
        "According to my understand, NeMF takes a network to represent a matching cost. In "
        "practice, people need a method to compute different matching cost for different "
        "image pairs. How does NeMF to deal with this situation.",
        "The answer states the contribution on semantic correspondence and names implicit "
        "neural representation as the main strength. It criticizes the experiment section, "
        "raises a concern about what the matching field represents, and discusses the "
        "limitation of representing one matching cost per network. Every question is "
        "addressed and nothing unrelated is included.",
        5};
    return r;
  }();
  return rubric;
}

void Rubric::validate() const {
  for (std::size_t i = 0; i < 5; ++i) {
    if (text::trim(descriptors[i]).empty()) throw InvalidInput("empty rubric descriptor");
    if (examples[i].score != static_cast<int>(i) + 1)
      throw InvalidInput("rubric examples must cover scores 1..5 in ascending order");
    if (examples[i].questions.empty()) throw InvalidInput("rubric example without questions");
  }
}

std::string Rubric::scale_text() const {
  std::string out;
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    if (i) out.push_back('\n');
    out += std::to_string(i + 1) + ": " + descriptors[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Requests and parsers

GenerationRequest build_generation_request(std::string_view review_text, const ExamplePool& pool,
                                           const BackendProfile& profile, Rng& rng,
                                           const PromptCallOptions& options,
                                           const TokenEstimator& estimator) {
  const auto& templates = templates_of(options);
  GenerationRequest out;
  out.request.system = templates.get("system");
  out.request.temperature = options.temperature;
  out.request.max_output_tokens = options.max_output_tokens;
  out.request.task = "pge.generate";
  const std::string review(review_text);
  const auto budget = prompt_budget(profile, options.max_output_tokens);

  std::string examples;
  auto render = [&](const std::string& ex) {
    out.request.turns = {{Role::User, templates.render("pge_generation",
                                                       {{"examples", ex}, {"review", review}})}};
    return request_tokens(out.request, estimator) <= budget;
  };
  if (!render(examples)) {
    throw ContextOverflow("the review alone does not fit the " + profile.name + " budget");
  }

  const auto entries = pool.snapshot();
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::swap(order[k], order[k + rng.uniform_index(order.size() - k)]);
    const auto& e = entries[order[k]];
    auto candidate = examples +
                     templates.render("pge_generation_example",
                                      {{"review", e.review_text},
                                       {"questions", numbered(e.prompt.questions)}}) +
                     "\n\n";
    if (!render(candidate)) {
      out.rejected_index = order[k];
      break;
    }
    examples = std::move(candidate);
    out.example_indices.push_back(order[k]);
  }
  render(examples);
  return out;
}

std::vector<std::string> parse_prompt_output(std::string_view output) {
  std::vector<std::string> questions;
  std::size_t pos = 0;
  while (pos <= output.size()) {
    auto end = output.find('\n', pos);
    if (end == std::string_view::npos) end = output.size();
    const auto line = text::trim(output.substr(pos, end - pos));
    pos = end + 1;
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) continue;
    auto q = text::trim(std::string_view(line).substr(i + 1));
    if (!q.empty()) questions.push_back(std::move(q));
  }
  if (questions.empty()) throw NoQuestionsFound("no numbered questions in the model output");
  return questions;
}

ChatRequest build_evaluation_request(const std::vector<std::string>& questions,
                                     std::string_view review_text, const Rubric& rubric,
                                     const PromptCallOptions& options) {
  rubric.validate();
  if (questions.empty()) throw InvalidInput("cannot evaluate an empty question set");
  const auto& templates = templates_of(options);
  std::string examples;
  for (const auto& ex : rubric.examples) {
    examples += templates.render("pge_evaluation_example",
                                 {{"questions", numbered(ex.questions)},
                                  {"answer", ex.answer},
                                  {"assessment", ex.assessment},
                                  {"score", std::to_string(ex.score)}}) +
                "\n\n";
  }
  ChatRequest request;
  request.system = templates.get("system");
  request.temperature = options.temperature;
  request.max_output_tokens = options.max_output_tokens;
  request.task = "pge.evaluate";
  request.turns = {{Role::User, templates.render("pge_evaluation",
                                                 {{"rubric", rubric.scale_text()},
                                                  {"examples", examples},
                                                  {"questions", numbered(questions)},
                                                  {"answer", std::string(review_text)}})}};
  return request;
}

EvaluationResult parse_evaluation_output(std::string_view output) {
  std::size_t word = std::string_view::npos;
  for (std::size_t i = 0; i + 5 <= output.size(); ++i) {
    if (text::to_lower_ascii(output.substr(i, 5)) != "score") continue;
    const bool left = i == 0 || !is_word_char(output[i - 1]);
    const bool right = i + 5 == output.size() || !is_word_char(output[i + 5]);
    if (left && right) word = i;
  }
  if (word == std::string_view::npos) throw ScoreNotFound("no score in the evaluation output");

  std::optional<int> score;
  for (std::size_t i = word + 5; i < output.size();) {
    if (!std::isdigit(static_cast<unsigned char>(output[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < output.size() && std::isdigit(static_cast<unsigned char>(output[j]))) ++j;
    auto digits = output.substr(i, j - i);
    while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
    if (digits.size() == 1 && digits[0] >= '1' && digits[0] <= '5') score = digits[0] - '0';
    i = j;
  }
  if (!score) throw ScoreNotFound("no score between 1 and 5 after the final score marker");
  return {text::trim(output.substr(0, word)), *score};
}

std::string to_string(AttemptOutcome outcome) {
  switch (outcome) {
    case AttemptOutcome::Accepted: return "accepted";
    case AttemptOutcome::LowScore: return "low_score";
    case AttemptOutcome::Overflow: return "overflow";
    case AttemptOutcome::NoQuestions: return "no_questions";
    case AttemptOutcome::Duplicate: return "duplicate";
    case AttemptOutcome::NoScore: return "no_score";
  }
  return "unknown";
}

double PgeStats::fraction_stored_within(int attempts) const {
  const auto processed = stored_count + excluded_count;
  if (processed == 0) return 0.0;
  std::size_t within = 0;
  for (const auto& [a, n] : attempts_histogram)
    if (a <= attempts) within += n;
  return static_cast<double>(within) / static_cast<double>(processed);
}

json PgeStats::to_json() const {
  json hist = json::object();
  for (const auto& [a, n] : attempts_histogram) hist[std::to_string(a)] = n;
  return {{"attempts_histogram", std::move(hist)},
          {"stored", stored_count},
          {"excluded", excluded_count},
          {"skipped", skipped_count},
          {"pool_size", pool_size},
          {"seed_count", seed_count},
          {"stored_within_3", fraction_stored_within(3)}};
}

// ---------------------------------------------------------------------------
// Loop

namespace {

struct ReviewOutcome {
  AspectPrompt prompt;
  std::vector<AttemptTrace> trace;
};

ReviewOutcome process_review(const Review& review, Backend& backend, ExamplePool& pool,
                             const PgeConfig& config, const Rubric& rubric) {
  const auto text = review_text(review);
  const ReviewKey key{review.paper_id, review.review_index};
  Rng rng(derive_seed(config.rng_seed, review.paper_id + "#" + std::to_string(review.review_index)));
  std::set<std::vector<std::string>> seen;

  ReviewOutcome out;
  out.prompt.paper_id = review.paper_id;
  out.prompt.review_index = review.review_index;

  for (int attempt = 1; attempt <= config.attempt_limit; ++attempt) {
    AttemptTrace t;
    t.review = key;
    t.attempt = attempt;
    try {
      auto gen = build_generation_request(text, pool, backend.profile(), rng, config.generation,
                                          backend.estimator());
      t.example_indices = gen.example_indices;
      const auto completion = backend.complete(gen.request);
      t.questions = parse_prompt_output(completion.text);
      if (!seen.insert(t.questions).second) {
        t.outcome = AttemptOutcome::Duplicate;
      } else {
        const auto eval = backend.complete(
            build_evaluation_request(t.questions, text, rubric, config.evaluation));
        t.score = parse_evaluation_output(eval.text).score;
        t.outcome = *t.score == 5 ? AttemptOutcome::Accepted : AttemptOutcome::LowScore;
      }
    } catch (const ContextOverflow&) {
      t.outcome = AttemptOutcome::Overflow;
    } catch (const NoQuestionsFound&) {
      t.outcome = AttemptOutcome::NoQuestions;
    } catch (const ScoreNotFound&) {
      t.outcome = AttemptOutcome::NoScore;
    }
    out.trace.push_back(t);
    if (t.score) out.prompt.score = t.score;
    if (t.outcome == AttemptOutcome::Accepted) {
      out.prompt.questions = t.questions;
      out.prompt.attempts = attempt;
      out.prompt.score = 5;
      pool.append({out.prompt, text});
      return out;
    }
    if (!t.questions.empty()) out.prompt.questions = t.questions;
  }
  out.prompt.attempts = config.attempt_limit;
  out.prompt.excluded = true;
  return out;
}

}  // namespace

PgeResult run_pge(const Corpus& corpus, Backend& backend, ExamplePool& pool,
                  const PgeConfig& config) {
  if (config.attempt_limit < 1) throw InvalidInput("attempt_limit must be at least 1");
  const Rubric& rubric = config.rubric ? *config.rubric : Rubric::standard();
  rubric.validate();

  PgeResult result;
  result.corpus = corpus;
  result.stats.seed_count = pool.seed_count();

  std::vector<const Review*> work;
  for (const auto& [id, reviews] : corpus.reviews) {
    for (const auto& r : reviews) {
      if (r.is_meta && !config.include_meta_reviews) continue;
      if (corpus.prompts.count({r.paper_id, r.review_index})) {
        ++result.stats.skipped_count;
        continue;
      }
      work.push_back(&r);
    }
  }

  std::vector<ReviewOutcome> outcomes(work.size());
  auto finish = [&](std::size_t i, ReviewOutcome o) {
    outcomes[i] = std::move(o);
    result.pool_size_history.push_back(pool.size());
  };

  if (config.concurrency <= 1 || work.size() <= 1) {
    for (std::size_t i = 0; i < work.size(); ++i)
      finish(i, process_review(*work[i], backend, pool, config, rubric));
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex done_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
      for (;;) {
        const auto i = next.fetch_add(1);
        if (i >= work.size()) return;
        {
          std::lock_guard lock(done_mutex);
          if (failure) return;
        }
        try {
          auto o = process_review(*work[i], backend, pool, config, rubric);
          std::lock_guard lock(done_mutex);
          finish(i, std::move(o));
        } catch (...) {
          std::lock_guard lock(done_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < std::min(config.concurrency, work.size()); ++t)
      threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (auto& o : outcomes) {
    if (o.prompt.excluded) {
      ++result.stats.excluded_count;
    } else {
      ++result.stats.stored_count;
      ++result.stats.attempts_histogram[o.prompt.attempts];
    }
    result.corpus.prompts[{o.prompt.paper_id, o.prompt.review_index}] = o.prompt;
    for (auto& t : o.trace) result.trace.push_back(std::move(t));
  }
  result.stats.pool_size = pool.size();
  return result;
}

}  // namespace revgen
