"""Synthetic cross-domain corpus generator.

Builds two desk-scale post corpora (twitter/instagram) plus a ground-truth
link file with controllable noise:

* usernames of linked pairs: exact copies, digit suffixes, character edits,
  circular rotations (the case the BW transform catches), or full renames;
* full names: "Last, First" reordering, diacritics, typos, case noise,
  missing values;
* content: per-person idiolect vocabularies shared across the person's two
  accounts, mixed with community vocabulary and common words; some users
  post too little to be model-eligible;
* graph: persons mention a stable friend set (mirrored on both platforms)
  and tag community plus personal hashtags shared across domains, so the
  hashtag-seeded aligned graph carries cross-domain signal; some users are
  isolates.

Everything is a pure function of (config, seed): the same config writes
byte-identical corpora.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .records import Post
from .validation import check_random_state

_FIRST_SYL = ("al", "ben", "car", "dan", "el", "fran", "gus", "han", "iv", "jo",
              "kat", "lu", "mar", "nor", "ol", "pat", "quin", "ros", "sam", "tom")
_SECOND_SYL = ("a", "by", "dra", "e", "ie", "ko", "la", "mund", "na", "o",
               "ra", "sey", "ta", "us", "vin", "win", "y", "zel")
_LAST_SYL1 = ("ander", "bar", "cast", "dom", "es", "fort", "gall", "holl", "ing",
              "jans", "kell", "lind", "mont", "nash", "ol", "per", "quig", "ross",
              "sut", "thor")
_LAST_SYL2 = ("berg", "dale", "er", "field", "gren", "ham", "ley", "man", "ner",
              "quist", "sen", "smith", "son", "stone", "ton", "vale", "wood", "worth")

_DIACRITICS = {"a": "á", "e": "é", "i": "í", "o": "ó", "u": "ú", "n": "ñ", "c": "ç", "y": "ý"}
_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _first_names() -> list[str]:
    return [a + b for a in _FIRST_SYL for b in _SECOND_SYL]


def _last_names() -> list[str]:
    return [a + b for a in _LAST_SYL1 for b in _LAST_SYL2]


@dataclass(frozen=True)
class SynthConfig:
    """Knobs of the generator; probabilities of the username noise modes must
    sum to at most 1 (the remainder is the exact-copy mode)."""

    n_users: int = 625
    overlap_fraction: float = 0.8
    seed: int = 0
    # username noise for linked pairs
    p_username_suffix: float = 0.22
    p_username_edit: float = 0.18
    p_username_rotation: float = 0.15
    p_username_rename: float = 0.10
    # full-name noise
    p_comma_form: float = 0.45
    p_diacritics: float = 0.35
    p_name_typo: float = 0.65
    p_name_short: float = 0.18
    p_missing_full_name: float = 0.12
    # content; each person's idiolect is a Dirichlet-weighted profile over the
    # community vocabulary (same-community authors are confusable), drifted
    # between the person's two accounts; some users additionally own a few
    # globally unique words
    common_vocab_size: int = 400
    idiolect_pool_size: int = 4000
    community_vocab_size: int = 60
    idiolect_share: float = 0.60
    dirichlet_alpha: float = 3.5
    idiolect_drift: float = 0.55
    p_unique_idiolect: float = 0.30
    unique_words: int = 3
    unique_share: float = 0.06
    p_low_content: float = 0.30
    posts_low: int = 12
    posts_high: int = 26
    words_low: int = 9
    words_high: int = 18
    # graph
    users_per_community: int = 25
    friends_low: int = 4
    friends_high: int = 9
    personal_hashtags: int = 3
    hashtag_pool_size: int = 80
    p_mention_friend: float = 0.75
    p_hashtag_post: float = 0.6
    p_cross_community_mention: float = 0.08
    p_isolate: float = 0.08

    def __post_init__(self):
        if self.n_users < 10:
            raise ValueError("n_users must be >= 10")
        if not 0.0 <= self.overlap_fraction <= 1.0:
            raise ValueError("overlap_fraction must be in [0, 1]")
        noise = (self.p_username_suffix + self.p_username_edit
                 + self.p_username_rotation + self.p_username_rename)
        if noise > 1.0:
            raise ValueError("username noise probabilities sum to more than 1")


# ---------------------------------------------------------------------------
# noise primitives (shared with the acceptance suite)
# ---------------------------------------------------------------------------

def perturb_username(base: str, mode: str, rng: np.random.Generator) -> str:
    """Apply one username noise mode: exact|suffix|edit|rotation."""
    if mode == "exact":
        return base
    if mode == "suffix":
        return base + "".join(str(rng.integers(0, 10)) for _ in range(int(rng.integers(1, 4))))
    if mode == "edit":
        chars = list(base)
        for _ in range(int(rng.integers(1, 3))):
            i = int(rng.integers(0, len(chars)))
            chars[i] = _LETTERS[int(rng.integers(0, len(_LETTERS)))]
        return "".join(chars)
    if mode == "rotation":
        if len(base) < 2:
            return base
        cut = int(rng.integers(1, len(base)))
        return base[cut:] + base[:cut]
    raise ValueError(f"unknown username noise mode {mode!r}")


def add_diacritics(name: str, rng: np.random.Generator, per_char: float = 0.3) -> str:
    out = []
    for ch in name:
        low = ch.lower()
        if low in _DIACRITICS and rng.random() < per_char:
            marked = _DIACRITICS[low]
            out.append(marked.upper() if ch.isupper() else marked)
        else:
            out.append(ch)
    return "".join(out)


def add_typo(name: str, rng: np.random.Generator) -> str:
    if len(name) < 2:
        return name
    i = int(rng.integers(0, len(name)))
    return name[:i] + _LETTERS[int(rng.integers(0, len(_LETTERS)))] + name[i + 1:]


def noisy_full_name(
    first: str,
    last: str,
    rng: np.random.Generator,
    p_comma: float,
    p_diacritics: float,
    p_typo: float,
    p_short: float = 0.0,
) -> str:
    """One noisy rendering of a canonical "First Last" name."""
    a, b = first.capitalize(), last.capitalize()
    if rng.random() < p_diacritics:
        a = add_diacritics(a, rng)
        b = add_diacritics(b, rng)
    if rng.random() < p_typo:
        if rng.random() < 0.5:
            a = add_typo(a, rng)
        else:
            b = add_typo(b, rng)
        if rng.random() < 0.35:
            a = add_typo(a, rng)
    if rng.random() < p_short:
        # initial-only or first-name-only rendering
        return f"{a} {b[0]}." if rng.random() < 0.5 else a
    if rng.random() < p_comma:
        return f"{b}, {a}"
    if rng.random() < 0.2:
        return f"{a} {b}".lower()
    return f"{a} {b}"


def synth_full_name_trials(
    n_true: int,
    n_false: int,
    seed: int = 0,
    p_comma: float = 0.45,
    p_diacritics: float = 0.35,
    p_typo: float = 1.0,
    p_second_typo: float = 0.5,
) -> list[tuple[str, str, bool]]:
    """Labelled full-name comparison trials with comma-reordering, diacritic,
    typo, and case noise. False pairs are hard: half share the last name and a
    quarter share the first name. Returns (name_a, name_b, label) triples."""
    rng = check_random_state(seed)
    firsts = _first_names()
    lasts = [a + m + b for a in _LAST_SYL1 for m in ("a", "e", "o") for b in _LAST_SYL2]

    def render(first: str, last: str) -> str:
        a, b = first.capitalize(), last.capitalize()
        if rng.random() < p_diacritics:
            a, b = add_diacritics(a, rng), add_diacritics(b, rng)
        if rng.random() < p_typo:
            if rng.random() < 0.5:
                a = add_typo(a, rng)
            else:
                b = add_typo(b, rng)
            if rng.random() < p_second_typo:
                if rng.random() < 0.5:
                    a = add_typo(a, rng)
                else:
                    b = add_typo(b, rng)
        if rng.random() < p_comma:
            return f"{b}, {a}"
        if rng.random() < 0.2:
            return f"{a} {b}".lower()
        return f"{a} {b}"

    def draw_name() -> tuple[str, str]:
        return (firsts[int(rng.integers(0, len(firsts)))],
                lasts[int(rng.integers(0, len(lasts)))])

    trials = []
    for _ in range(n_true):
        f, l = draw_name()
        trials.append((render(f, l), render(f, l), True))
    for _ in range(n_false):
        f1, l1 = draw_name()
        r = rng.random()
        if r < 0.5:
            f2, l2 = draw_name()[0], l1
        elif r < 0.75:
            f2, l2 = f1, draw_name()[1]
        else:
            f2, l2 = draw_name()
        trials.append((render(f1, l1), render(f2, l2), False))
    return trials


# ---------------------------------------------------------------------------
# corpus generation
# ---------------------------------------------------------------------------

@dataclass
class _Person:
    index: int
    first: str
    last: str
    base_username: str
    community: int
    on_twitter: bool
    on_instagram: bool
    twitter_username: str = ""
    instagram_username: str = ""
    friends: tuple[int, ...] = ()
    hashtags: tuple[str, ...] = ()
    unique_words: tuple[str, ...] = ()
    profile_t: np.ndarray | None = None  # idiolect weights over community vocab
    profile_i: np.ndarray | None = None
    low_content: bool = False
    isolate: bool = False


@dataclass
class SynthCorpus:
    twitter_posts: list[Post]
    instagram_posts: list[Post]
    links: list[tuple[str, str]]  # (twitter user_id, instagram user_id)


def synth_corpus(config: SynthConfig) -> SynthCorpus:
    rng = check_random_state(config.seed)
    n = config.n_users
    n_linked = int(round(n * config.overlap_fraction))
    n_total = 2 * n - n_linked  # persons: linked + twitter-only + instagram-only

    firsts = _first_names()
    lasts = _last_names()
    n_comms = max(2, n // config.users_per_community)
    common_words = [f"w{i}" for i in range(config.common_vocab_size)]
    idiolect_pool = [f"q{i}" for i in range(config.idiolect_pool_size)]
    community_vocab = {
        c: [f"c{c}x{j}" for j in range(config.community_vocab_size)] for c in range(n_comms)
    }
    tag_pool = [f"spot{i}" for i in range(config.hashtag_pool_size)]

    persons: list[_Person] = []
    used_usernames: set[str] = set()
    for idx in range(n_total):
        first = firsts[int(rng.integers(0, len(firsts)))]
        last = lasts[int(rng.integers(0, len(lasts)))]
        base = first + last
        while base in used_usernames:
            base = base + str(rng.integers(0, 10))
        used_usernames.add(base)
        persons.append(_Person(
            index=idx,
            first=first,
            last=last,
            base_username=base,
            community=int(rng.integers(0, n_comms)),
            on_twitter=idx < n,
            on_instagram=idx < n_linked or idx >= n,
        ))

    alpha = np.full(config.community_vocab_size, config.dirichlet_alpha)
    for p in persons:
        p.low_content = rng.random() < config.p_low_content
        p.isolate = rng.random() < config.p_isolate
        p.profile_t = rng.dirichlet(alpha)
        drift = config.idiolect_drift
        p.profile_i = (1.0 - drift) * p.profile_t + drift * rng.dirichlet(alpha)
        if rng.random() < config.p_unique_idiolect:
            p.unique_words = tuple(
                idiolect_pool[k] for k in rng.choice(
                    config.idiolect_pool_size, size=config.unique_words, replace=False)
            )
        n_tags = config.personal_hashtags
        p.hashtags = (f"topic{p.community}",) + tuple(
            tag_pool[k] for k in rng.choice(config.hashtag_pool_size, size=n_tags, replace=False)
        )
        p.twitter_username = p.base_username
        if p.on_instagram and not p.on_twitter:
            p.instagram_username = p.base_username
        elif p.on_instagram:
            r = rng.random()
            thresholds = np.cumsum([
                config.p_username_suffix, config.p_username_edit,
                config.p_username_rotation, config.p_username_rename,
            ])
            if r < thresholds[0]:
                mode = "suffix"
            elif r < thresholds[1]:
                mode = "edit"
            elif r < thresholds[2]:
                mode = "rotation"
            elif r < thresholds[3]:
                mode = "rename"
            else:
                mode = "exact"
            if mode == "rename":
                fresh = firsts[int(rng.integers(0, len(firsts)))] + lasts[int(rng.integers(0, len(lasts)))]
                while fresh in used_usernames:
                    fresh = fresh + str(rng.integers(0, 10))
                used_usernames.add(fresh)
                p.instagram_username = fresh
            else:
                candidate = perturb_username(p.base_username, mode, rng)
                if candidate != p.base_username and candidate in used_usernames:
                    candidate = candidate + str(rng.integers(0, 10))
                used_usernames.add(candidate)
                p.instagram_username = candidate

    # stable friend sets, mostly within community
    by_comm: dict[int, list[int]] = {}
    for p in persons:
        by_comm.setdefault(p.community, []).append(p.index)
    for p in persons:
        k = int(rng.integers(config.friends_low, config.friends_high + 1))
        friends = []
        mates = [i for i in by_comm[p.community] if i != p.index]
        for _ in range(k):
            if mates and rng.random() >= config.p_cross_community_mention:
                friends.append(mates[int(rng.integers(0, len(mates)))])
            else:
                other = int(rng.integers(0, n_total))
                if other != p.index:
                    friends.append(other)
        p.friends = tuple(sorted(set(friends)))

    def make_text(p: _Person, domain: str, words: int,
                  rng: np.random.Generator) -> tuple[str, list[str]]:
        tokens = []
        tags = []
        vocab = community_vocab[p.community]
        profile = p.profile_t if domain == "twitter" else p.profile_i
        picks = rng.choice(len(vocab), size=words, p=profile)
        for k in range(words):
            r = rng.random()
            if p.unique_words and r < config.unique_share:
                tokens.append(p.unique_words[int(rng.integers(0, len(p.unique_words)))])
            elif r < config.unique_share + config.idiolect_share:
                tokens.append(vocab[int(picks[k])])
            else:
                tokens.append(common_words[int(rng.integers(0, len(common_words)))])
        if rng.random() < 0.12:
            tokens.append("http://ex.am/" + str(rng.integers(0, 10_000)))
        if rng.random() < 0.05:
            tokens.append("cooool")
        if not p.isolate and rng.random() < config.p_hashtag_post:
            tag = p.hashtags[int(rng.integers(0, len(p.hashtags)))]
            tokens.append("#" + tag)
            tags.append(tag)
        return " ".join(tokens), tags

    def make_posts(p: _Person, domain: str, rng: np.random.Generator) -> list[Post]:
        if domain == "twitter":
            uid, uname = f"tu{p.index}", p.twitter_username
        else:
            uid, uname = f"iu{p.index}", p.instagram_username
        if p.low_content:
            n_posts = int(rng.integers(2, 5))
        else:
            n_posts = int(rng.integers(config.posts_low, config.posts_high + 1))
        full_name = None
        if rng.random() >= config.p_missing_full_name:
            full_name = noisy_full_name(
                p.first, p.last, rng,
                p_comma=config.p_comma_form if domain == "instagram" else 0.05,
                p_diacritics=config.p_diacritics if domain == "instagram" else 0.1,
                p_typo=config.p_name_typo if domain == "instagram" else 0.15,
                p_short=config.p_name_short if domain == "instagram" else 0.03,
            )
        posts = []
        for j in range(n_posts):
            words = int(rng.integers(config.words_low, config.words_high + 1))
            text, tags = make_text(p, domain, words, rng)
            mentions: list[str] = []
            if not p.isolate and p.friends and rng.random() < config.p_mention_friend:
                friend = persons[p.friends[int(rng.integers(0, len(p.friends)))]]
                fr_name = friend.twitter_username if domain == "twitter" else (
                    friend.instagram_username or friend.base_username)
                if fr_name and fr_name != uname:
                    mentions.append(fr_name)
            posts.append(Post(
                domain=domain,
                post_id=f"{domain[0]}{p.index}_{j}",
                user_id=uid,
                username=uname,
                full_name=full_name,
                text=text,
                mentions=tuple(mentions),
                hashtags=tuple(tags) if not p.isolate else (),
            ))
        return posts

    twitter_posts: list[Post] = []
    instagram_posts: list[Post] = []
    links: list[tuple[str, str]] = []
    for p in persons:
        if p.on_twitter:
            twitter_posts.extend(make_posts(p, "twitter", rng))
        if p.on_instagram:
            instagram_posts.extend(make_posts(p, "instagram", rng))
        if p.on_twitter and p.on_instagram:
            links.append((f"tu{p.index}", f"iu{p.index}"))
    return SynthCorpus(twitter_posts, instagram_posts, links)


def write_synth_corpus(config: SynthConfig, out_dir: str | Path) -> dict[str, Path]:
    """Write twitter.jsonl, instagram.jsonl, and links.tsv into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = synth_corpus(config)
    paths = {
        "twitter": out / "twitter.jsonl",
        "instagram": out / "instagram.jsonl",
        "links": out / "links.tsv",
    }
    for key, posts in (("twitter", corpus.twitter_posts), ("instagram", corpus.instagram_posts)):
        with open(paths[key], "w", encoding="utf-8") as fh:
            for post in posts:
                fh.write(json.dumps(post.to_json_dict(), sort_keys=True) + "\n")
    with open(paths["links"], "w", encoding="utf-8") as fh:
        fh.write("twitter_user_id\tinstagram_user_id\n")
        for t, i in corpus.links:
            fh.write(f"{t}\t{i}\n")
    return paths
