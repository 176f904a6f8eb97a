"""The universal ingestion record: one social-media post."""

from __future__ import annotations

from dataclasses import dataclass, field

DOMAINS = ("twitter", "instagram")

# Characters forbidden in identifiers so TSV files and "u_t|u_i" trial ids
# stay unambiguous.
_FORBIDDEN_ID_CHARS = ("|", "\t", "\n", "\r")


@dataclass(frozen=True)
class Post:
    """One post: profile attributes ride along on every record.

    hashtags are stored without the leading '#' and lowercased; mentions are
    stored without the leading '@'. link_target optionally names the same
    entity's username on the other platform (ground-truth signal).
    """

    domain: str
    post_id: str
    user_id: str
    username: str
    text: str
    full_name: str | None = None
    mentions: tuple[str, ...] = field(default_factory=tuple)
    hashtags: tuple[str, ...] = field(default_factory=tuple)
    link_target: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "domain": self.domain,
            "post_id": self.post_id,
            "user_id": self.user_id,
            "username": self.username,
            "full_name": self.full_name,
            "text": self.text,
            "mentions": list(self.mentions),
            "hashtags": list(self.hashtags),
            "link_target": self.link_target,
        }


def post_from_dict(obj: dict) -> Post:
    """Build a Post from a parsed JSON object, normalizing per the schema.

    Raises ValueError on records that cannot be repaired (missing required
    fields, unknown domain, forbidden characters in identifiers).
    """
    if not isinstance(obj, dict):
        raise ValueError("post record is not an object")
    domain = obj.get("domain")
    if domain not in DOMAINS:
        raise ValueError(f"unknown domain {domain!r}")
    for key in ("post_id", "user_id", "username", "text"):
        value = obj.get(key)
        if not isinstance(value, str) or (key != "text" and not value):
            raise ValueError(f"missing or invalid field {key!r}")
    for key in ("post_id", "user_id", "username"):
        if any(ch in obj[key] for ch in _FORBIDDEN_ID_CHARS):
            raise ValueError(f"forbidden character in field {key!r}")
    full_name = obj.get("full_name")
    if full_name is not None and not isinstance(full_name, str):
        raise ValueError("full_name must be a string or null")
    mentions = obj.get("mentions") or []
    hashtags = obj.get("hashtags") or []
    if not isinstance(mentions, list) or not isinstance(hashtags, list):
        raise ValueError("mentions and hashtags must be lists")
    link_target = obj.get("link_target")
    if link_target is not None and not isinstance(link_target, str):
        raise ValueError("link_target must be a string or null")
    return Post(
        domain=domain,
        post_id=obj["post_id"],
        user_id=obj["user_id"],
        username=obj["username"],
        text=obj["text"],
        full_name=full_name or None,
        mentions=tuple(str(m).lstrip("@") for m in mentions if str(m).lstrip("@")),
        hashtags=tuple(str(h).lstrip("#").lower() for h in hashtags if str(h).lstrip("#")),
        link_target=link_target or None,
    )
