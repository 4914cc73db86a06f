import random

import pytest

from collagelink.model import BoundingBox
from collagelink.username import (
    UsernameCandidate, WordToken, assign_usernames, default_generic_names, default_ui_words, filter_tokens,
    load_word_list, merge_word_tokens, normalize_username,
)


def tok(text, x, y, w=None, h=12):
    return WordToken(text, BoundingBox(x, y, w or 8 * len(text), h))


def texts(cands):
    return [c.text for c in cands]


def random_layout(rng, n):
    return [
        WordToken(f"w{i}", BoundingBox(rng.uniform(0, 150), rng.uniform(0, 150), rng.uniform(3, 30), rng.uniform(5, 15)))
        for i in range(n)
    ]


# ---------------------------------------------------------------- filtering

def test_default_ui_words_are_the_meeting_vocabulary():
    ui = default_ui_words()
    assert {"mute", "unmute", "participants", "zoom", "here", "message", "raise", "hand"} <= ui
    # the bundled file has 38 lines with "view" and "recording" repeated
    assert len(ui) == 36


def test_filter_examples():
    assert filter_tokens([tok("mute", 0, 0)]) == []
    assert texts(filter_tokens([tok("Dvora", 0, 0)])) == ["Dvora"]
    assert filter_tokens([tok("apple", 0, 0)], dictionary={"apple"}) == []
    assert filter_tokens([tok("MUTE", 0, 0), tok("Apple", 0, 0)], dictionary={"APPLE"}) == []


def test_filter_preserves_order_and_text():
    tokens = [tok("Zed", 0, 0), tok("Chat", 0, 0), tok("amy", 5, 5), tok("Leave", 1, 1), tok("Bo", 2, 2)]
    out = filter_tokens(tokens)
    assert out == [tokens[0], tokens[2], tokens[4]]


def test_word_list_file(tmp_path):
    f = tmp_path / "words.txt"
    f.write_text("# comment\nApple\n\n  banana  \nBANANA\n")
    assert load_word_list(f) == {"apple", "banana"}


def test_word_token_rejects_spaces():
    with pytest.raises(ValueError):
        WordToken("two words", BoundingBox(0, 0, 5, 5))
    with pytest.raises(ValueError):
        WordToken("", BoundingBox(0, 0, 5, 5))


# ---------------------------------------------------------------- merging

def test_three_four_five_merge():
    # John's top-right is (50, 10); Smith's top-left (53, 14) is 5 px away
    out = merge_word_tokens([tok("Smith", 53, 14, 40), tok("John", 10, 10, 40)])
    assert texts(out) == ["John Smith"]
    assert out[0].word_count == 2
    assert out[0].box == BoundingBox(10, 10, 83, 16)


def test_far_tokens_stay_apart():
    out = merge_word_tokens([tok("Ann", 0, 0, 20), tok("Bob", 50, 0, 20)])
    assert texts(out) == ["Ann", "Bob"]


def test_exact_threshold_merges():
    assert texts(merge_word_tokens([tok("A", 0, 0, 10), tok("B", 20, 0, 10)])) == ["A B"]
    assert texts(merge_word_tokens([tok("A", 0, 0, 10), tok("B", 20.01, 0, 10)])) == ["A", "B"]


def test_chain_needs_two_passes():
    # hand trace: pass 1 joins Anne+Marie and leaves Cohen (its only partner is consumed);
    # pass 2 joins "Anne Marie" + Cohen; pass 3 finds nothing
    tokens = [tok("Anne", 0, 0, 30), tok("Marie", 36, 0, 40), tok("Cohen", 82, 0, 40)]
    assert texts(merge_word_tokens(tokens, max_passes=1)) == ["Anne Marie", "Cohen"]
    assert texts(merge_word_tokens(tokens)) == ["Anne Marie Cohen"]
    assert merge_word_tokens(tokens)[0].word_count == 3


def test_merged_text_reads_left_to_right():
    # "Levi" sits slightly higher so it is visited first, but its nearest partner is far;
    # "Dana" then picks it up and the text still reads left to right
    out = merge_word_tokens([tok("Levi", 40, 8, 30), tok("Dana", 0, 10, 35)])
    assert texts(out) == ["Dana Levi"]


def test_tie_break_prefers_smaller_x_then_y():
    # both partners are exactly 5 px from A's top-right corner (10, 0)
    a = tok("A", 0, 0, 10)
    up = tok("Up", 13, 4, 10)     # (13, 4): 3-4-5
    down = tok("Dn", 14, 3, 10)   # (14, 3): 4-3-5
    out = merge_word_tokens([a, down, up], max_passes=1)
    assert sorted(texts(out)) == ["A Up", "Dn"]


def test_empty_input():
    assert merge_word_tokens([]) == []


def test_conservation_idempotence_and_permutation_on_random_layouts():
    rng = random.Random(2024)
    for _ in range(200):
        tokens = random_layout(rng, rng.randint(0, 14))
        out = merge_word_tokens(tokens)
        assert sum(c.word_count for c in out) == len(tokens)
        assert all(c.word_count == len(c.text.split()) for c in out)
        assert merge_word_tokens(out) == out
        shuffled = tokens[:]
        rng.shuffle(shuffled)
        assert merge_word_tokens(shuffled) == out


def test_candidate_box_covers_members():
    rng = random.Random(5)
    for _ in range(50):
        tokens = random_layout(rng, 10)
        for cand in merge_word_tokens(tokens):
            members = [t for t in tokens if t.text in cand.text.split()]
            for m in members:
                assert m.box.x >= cand.box.x and m.box.y >= cand.box.y
                assert m.box.right <= cand.box.right + 1e-9 and m.box.bottom <= cand.box.bottom + 1e-9


# ---------------------------------------------------------------- normalization

def test_normalize_examples():
    assert normalize_username("  John  Smith ", set()) == ("john smith", False)
    assert normalize_username("IPHONE") == ("iphone", True)
    assert normalize_username("iphone 12", {"iphone"}) == ("iphone 12", False)


def test_default_generic_names():
    names = default_generic_names()
    assert {"iphone", "ipad"} <= names


# ---------------------------------------------------------------- assignment

def test_usernames_attach_to_face_above():
    faces = [BoundingBox(20, 20, 60, 60), BoundingBox(150, 20, 60, 60), BoundingBox(20, 160, 60, 60)]
    cands = [
        UsernameCandidate("dana", BoundingBox(20, 90, 40, 12), 1),
        UsernameCandidate("eli", BoundingBox(150, 90, 24, 12), 1),
        UsernameCandidate("row two", BoundingBox(20, 230, 60, 12), 2),
        UsernameCandidate("banner", BoundingBox(300, 2, 40, 12), 1),
    ]
    assigned, unassigned = assign_usernames(faces, cands)
    assert {k: v.text for k, v in assigned.items()} == {0: "dana", 1: "eli", 2: "row two"}
    assert [c.text for c in unassigned] == ["banner"]


def test_two_usernames_one_face_nearest_wins():
    faces = [BoundingBox(0, 0, 20, 20)]
    near = UsernameCandidate("near", BoundingBox(0, 25, 20, 10), 1)
    far = UsernameCandidate("far", BoundingBox(0, 80, 20, 10), 1)
    assigned, unassigned = assign_usernames(faces, [far, near])
    assert assigned[0].text == "near"
    assert [c.text for c in unassigned] == ["far"]
