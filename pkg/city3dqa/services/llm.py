"""Chat-completion client used to paraphrase template questions."""

import requests

from ..exceptions import ExternalServiceError


class ChatCompletionClient:
    """Handles interactions with a chat-completion style HTTP endpoint."""

    def __init__(
        self,
        endpoint: str,
        model: str = "gpt-3.5-turbo",
        temperature: float = 0.7,
        timeout: float = 30.0,
        api_key: str | None = None,
    ):
        """Initialize the client.

        Args:
            endpoint (str): Full URL of the chat-completions route.
            model (str): Model name sent with every request.
            temperature (float): Sampling temperature.
            timeout (float): Per-request timeout in seconds. Defaults to 30.
            api_key (str | None): Bearer token, if the endpoint needs one.
        """
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.timeout = timeout
        self.api_key = api_key

    def complete(self, prompt: str) -> str:
        """Send one user message and return the first choice's content.

        Args:
            prompt (str): Filled prompt text.

        Returns:
            str: The model reply, stripped.

        Raises:
            ExternalServiceError: On transport errors, HTTP errors or an unexpected payload.
        """
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        data = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }

        try:
            response = requests.post(self.endpoint, headers=headers, json=data, timeout=self.timeout)
            response.raise_for_status()
            response_data = response.json()
        except (requests.RequestException, ValueError) as exc:
            raise ExternalServiceError(f"chat completion failed: {exc}") from exc

        try:
            content = response_data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise ExternalServiceError("chat completion payload has no choices[0].message.content") from None
        if not isinstance(content, str) or not content.strip():
            raise ExternalServiceError("chat completion returned empty content")
        return content.strip()
