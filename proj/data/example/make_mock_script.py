#!/usr/bin/env python3
"""Regenerate mock_script.json for the walkthrough in the README."""
import json
import pathlib

def split(question, yes, no, hint):
    body = {
        "reasoning": [
            {
                "question": "Does the utterance respond to something just said?",
                "answer": hint,
            }
        ],
        "question": question,
        "groups": [
            {"answer": "Yes", "classes": yes},
            {"answer": "No", "classes": no},
        ],
    }
    return json.dumps(body)

entries = [
    {
        "expect_substring": "React.Deny",
        "response": split(
            "Does the utterance start a new exchange rather than respond to one?",
            ["Open.Greet", "Open.Ask"],
            ["React.Agree", "React.Deny"],
            "Opening moves stand alone; reactions depend on the prior turn.",
        ),
        "prompt_tokens": 260,
        "completion_tokens": 90,
    },
    {
        "expect_substring": "Open.Ask",
        "response": split(
            "Is the utterance a greeting or welcome?",
            ["Open.Greet"],
            ["Open.Ask"],
            "Greetings salute; questions request.",
        ),
        "prompt_tokens": 180,
        "completion_tokens": 70,
    },
    {
        "expect_substring": "React.Deny",
        "response": split(
            "Does the speaker accept what was just said?",
            ["React.Agree"],
            ["React.Deny"],
            "Agreement confirms; denial contradicts.",
        ),
        "prompt_tokens": 180,
        "completion_tokens": 70,
    },
]

# Two answers per annotated utterance: root question first, then the
# level-two question. "That sounds exhausting." is answered wrong on
# purpose so the walkthrough shows a non-trivial evaluation.
answers = [
    ("Hello there!", ["Yes", "Yes"]),
    ("Hi, good to see you.", ["Yes", "Yes"]),
    ("Do you want to grab lunch?", ["Yes", "No"]),
    ("Sure, that works for me.", ["No", "Yes"]),
    ("Did you finish the report?", ["Yes", "No"]),
    ("No, not yet,", ["No", "No"]),
    ("That sounds exhausting.", ["No", "No"]),
]
for utterance, replies in answers:
    for reply in replies:
        entries.append(
            {
                "expect_substring": utterance,
                "response": reply,
                "prompt_tokens": 150,
                "completion_tokens": 2,
            }
        )

out = pathlib.Path(__file__).with_name("mock_script.json")
out.write_text(json.dumps(entries, indent=2) + "\n")
print(f"wrote {out} ({len(entries)} entries)")
